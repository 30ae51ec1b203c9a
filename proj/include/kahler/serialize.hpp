#pragma once

#include "kahler/field.hpp"

#include <json.hpp>

#include <string>

namespace kahler {

nlohmann::json chart_to_json(const GridChart& c);
GridChart chart_from_json(const nlohmann::json& j);

/// Field files: one JSON header line {kind, n, resolution, geometry,
/// parity}, then little-endian float64 values in row-major node order
/// (complex values as interleaved re, im; forms as full n x n complex
/// matrices per node).
void write_field(const std::string& path, const ScalarField& f);
void write_field(const std::string& path, const Form11Field& h);
ScalarField read_scalar_field(const std::string& path);
Form11Field read_form_field(const std::string& path);
nlohmann::json read_field_header(const std::string& path);

}  // namespace kahler
