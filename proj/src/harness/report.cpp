#include "kahler/harness.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <ostream>
#include <sstream>
#include <tuple>

namespace kahler {

using nlohmann::json;
namespace fs = std::filesystem;

namespace {

bool read_json(const fs::path& p, json& out) {
    std::ifstream in(p);
    if (!in) return false;
    try {
        out = json::parse(in);
    } catch (const json::parse_error&) {
        return false;
    }
    return out.is_object();
}

std::string plain(const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); }

double number(const json& v) {
    if (v.is_number()) return v.get<double>();
    if (v == "inf") return std::numeric_limits<double>::infinity();
    if (v == "-inf") return -std::numeric_limits<double>::infinity();
    return std::numeric_limits<double>::quiet_NaN();
}

std::string format(double v) {
    std::ostringstream s;
    s << std::setprecision(6) << v;
    return s.str();
}

// CSV field quoting for values that may carry commas or quotes.
std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) out += c == '"' ? std::string("\"\"") : std::string(1, c);
    return out + "\"";
}

}  // namespace

std::vector<ReportRow> report_table(const std::vector<std::string>& dirs) {
    std::vector<ReportRow> rows;
    for (const auto& d : dirs) {
        ReportRow row;
        row.directory = d;
        row.name = fs::path(d).filename().string();
        json manifest, report;
        if (!read_json(fs::path(d) / "manifest.json", manifest) || !manifest.contains("config") ||
            !read_json(fs::path(d) / "report.json", report)) {
            row.status = "missing-manifest";
            row.value = std::numeric_limits<double>::quiet_NaN();
            rows.push_back(row);
            continue;
        }
        const json& cfg = manifest["config"];
        row.name = cfg.value("name", row.name);
        row.experiment = cfg.value("kind", "");
        std::string params;
        const json given = report.value("params", json::object());
        for (const auto& [k, v] : given.items())
            params += (params.empty() ? "" : " ") + k + "=" + plain(v);
        row.params = params;
        const json h = report.value("headline", json::object());
        row.metric = h.value("name", "");
        row.value = h.contains("value") ? number(h["value"]) : std::numeric_limits<double>::quiet_NaN();
        row.status = report.value("pass", false) ? "pass" : "fail";
        rows.push_back(row);
    }
    std::stable_sort(rows.begin(), rows.end(), [](const ReportRow& a, const ReportRow& b) {
        return std::tie(a.name, a.directory) < std::tie(b.name, b.directory);
    });
    return rows;
}

std::string report_csv(const std::vector<ReportRow>& rows) {
    std::ostringstream out;
    out.precision(17);
    out << "name,experiment,params,metric,value,status,directory\n";
    for (const auto& r : rows)
        out << quote(r.name) << ',' << r.experiment << ',' << quote(r.params) << ',' << r.metric << ',' << r.value
            << ',' << r.status << ',' << quote(r.directory) << '\n';
    return out.str();
}

json report_json(const std::vector<ReportRow>& rows) {
    json runs = json::array();
    int passed = 0;
    for (const auto& r : rows) {
        runs.push_back({{"name", r.name},
                        {"experiment", r.experiment},
                        {"params", r.params},
                        {"metric", r.metric},
                        {"value", r.value},
                        {"status", r.status},
                        {"directory", r.directory}});
        passed += r.status == "pass";
    }
    return {{"runs", runs}, {"passed", passed}, {"total", rows.size()}};
}

void print_table(const std::vector<ReportRow>& rows, std::ostream& out) {
    const std::vector<std::string> head = {"name", "experiment", "metric", "value", "status", "params"};
    std::vector<std::vector<std::string>> cells;
    for (const auto& r : rows) cells.push_back({r.name, r.experiment, r.metric, format(r.value), r.status, r.params});
    std::vector<std::size_t> w(head.size());
    for (std::size_t c = 0; c < head.size(); ++c) {
        w[c] = head[c].size();
        for (const auto& row : cells) w[c] = std::max(w[c], row[c].size());
    }
    auto line = [&](const std::vector<std::string>& v) {
        for (std::size_t c = 0; c < v.size(); ++c) {
            out << v[c];
            if (c + 1 < v.size()) out << std::string(w[c] - v[c].size() + 2, ' ');
        }
        out << '\n';
    };
    line(head);
    int passed = 0;
    for (const auto& row : cells) {
        line(row);
        passed += row[4] == "pass";
    }
    out << passed << "/" << rows.size() << " passed\n";
}

}  // namespace kahler
