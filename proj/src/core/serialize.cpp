#include "kahler/serialize.hpp"

#include "kahler/error.hpp"

#include <bit>
#include <cstring>
#include <fstream>

namespace kahler {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "field files assume a little-endian host");

ChartKind kind_from(const std::string& s) {
    if (s == "torus") return ChartKind::torus;
    if (s == "patch") return ChartKind::patch;
    if (s == "log-polar-annulus") return ChartKind::annulus;
    if (s == "product") return ChartKind::product;
    throw FieldError("unknown chart kind '" + s + "'");
}

void write_doubles(std::ofstream& out, const double* p, std::size_t n) {
    out.write(reinterpret_cast<const char*>(p), static_cast<std::streamsize>(n * sizeof(double)));
}

std::ofstream open_out(const std::string& path, const json& header) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw FieldError("cannot write " + path);
    out << header.dump() << '\n';
    return out;
}

json header_for(const GridChart& c, const char* kind, int n, const char* parity) {
    return json{{"kind", kind}, {"n", n}, {"resolution", c.resolution()}, {"geometry", chart_to_json(c)},
                {"parity", parity}};
}

struct Reader {
    std::ifstream in;
    json header;
    explicit Reader(const std::string& path) : in(path, std::ios::binary) {
        if (!in) throw FieldError("cannot read " + path);
        std::string line;
        std::getline(in, line);
        header = json::parse(line);
    }
    std::vector<double> doubles(std::size_t n) {
        std::vector<double> v(n);
        in.read(reinterpret_cast<char*>(v.data()), static_cast<std::streamsize>(n * sizeof(double)));
        if (static_cast<std::size_t>(in.gcount()) != n * sizeof(double)) throw FieldError("field file truncated");
        return v;
    }
};

}  // namespace

json chart_to_json(const GridChart& c) {
    json axes = json::array();
    for (int a = 0; a < c.axis_count(); ++a) {
        const Axis& ax = c.axis(a);
        axes.push_back({{"periodic", ax.periodic}, {"lo", ax.lo}, {"hi", ax.hi}, {"count", ax.count}});
    }
    json j{{"chart", c.kind_name()}, {"axes", axes}, {"fd_order", c.fd_order()}};
    if (c.kind() == ChartKind::product) j["fiber"] = c.fiber_kind() == FiberKind::torus ? "torus" : "patch";
    return j;
}

GridChart chart_from_json(const json& j) {
    std::vector<Axis> axes;
    for (const auto& a : j.at("axes"))
        axes.push_back(Axis{a.at("periodic").get<bool>(), a.at("lo").get<double>(), a.at("hi").get<double>(),
                            a.at("count").get<int>()});
    const FiberKind fk = j.value("fiber", std::string("torus")) == "patch" ? FiberKind::patch : FiberKind::torus;
    return GridChart::from_axes(kind_from(j.at("chart").get<std::string>()), fk, std::move(axes),
                                j.value("fd_order", 8));
}

void write_field(const std::string& path, const ScalarField& f) {
    auto out = open_out(path, header_for(f.chart(), "scalar", f.chart().n(), f.is_real() ? "real" : "complex"));
    if (f.is_real()) {
        write_doubles(out, f.re().data(), f.size());
    } else {
        std::vector<double> buf(2 * f.size());
        for (std::size_t i = 0; i < f.size(); ++i) {
            buf[2 * i] = f.re()[i];
            buf[2 * i + 1] = f.im()[i];
        }
        write_doubles(out, buf.data(), buf.size());
    }
}

void write_field(const std::string& path, const Form11Field& h) {
    auto out = open_out(path, header_for(h.chart(), "form11", h.n(), "complex"));
    const int n = h.n();
    std::vector<double> buf(2 * n * n);
    for (std::size_t i = 0; i < h.size(); ++i) {
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                const cd v = h.coeff(i, a, b);
                buf[2 * (a * n + b)] = v.real();
                buf[2 * (a * n + b) + 1] = v.imag();
            }
        write_doubles(out, buf.data(), buf.size());
    }
}

json read_field_header(const std::string& path) { return Reader(path).header; }

ScalarField read_scalar_field(const std::string& path) {
    Reader r(path);
    if (r.header.at("kind") != "scalar") throw FieldError(path + ": not a scalar field");
    auto chart = share(chart_from_json(r.header.at("geometry")));
    const std::size_t N = chart->node_count();
    if (r.header.at("parity") == "real") return ScalarField::real(chart, r.doubles(N));
    auto v = r.doubles(2 * N);
    std::vector<double> re(N), im(N);
    for (std::size_t i = 0; i < N; ++i) {
        re[i] = v[2 * i];
        im[i] = v[2 * i + 1];
    }
    return ScalarField::complex(chart, std::move(re), std::move(im));
}

Form11Field read_form_field(const std::string& path) {
    Reader r(path);
    if (r.header.at("kind") != "form11") throw FieldError(path + ": not a (1,1)-form field");
    auto chart = share(chart_from_json(r.header.at("geometry")));
    const int n = r.header.at("n").get<int>();
    Form11Field h(chart, n);
    for (std::size_t i = 0; i < chart->node_count(); ++i) {
        auto v = r.doubles(2 * n * n);
        SmallMatrix a(n, n);
        for (int p = 0; p < n; ++p)
            for (int q = 0; q < n; ++q) a(p, q) = cd(v[2 * (p * n + q)], v[2 * (p * n + q) + 1]);
        h.set(i, a);
    }
    return h;
}

}  // namespace kahler
