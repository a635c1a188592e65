#pragma once

#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <ostream>
#include <span>
#include <sstream>
#include <string>
#include <system_error>
#include <vector>

#include "json.hpp"

#include "geonum/error.hpp"
#include "geonum/experiments.hpp"
#include "geonum/forms.hpp"
#include "geonum/lattice.hpp"
#include "geonum/siegel.hpp"
#include "geonum/volume.hpp"

namespace geonum {

using Json = nlohmann::json;

/// Shortest round-trip decimal form of a double ('.' separator, no locale).
inline std::string format_number(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buffer[64];
  const auto [end, ec] = std::to_chars(buffer, buffer + sizeof buffer, value);
  if (ec != std::errc{}) throw ComputationError("format_number: conversion failed");
  return std::string(buffer, end);
}

namespace detail {

inline Json square_to_json(const Matrix& m, const char* key) {
  std::vector<double> flat;
  flat.reserve(static_cast<std::size_t>(m.size()));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) flat.push_back(m(i, j));
  }
  return Json{{"dim", m.rows()}, {key, flat}};
}

inline Matrix square_from_json(const Json& j, const char* key) {
  if (!j.is_object() || !j.contains("dim") || !j.contains(key)) {
    throw ValidationError(std::string("json: expected object with \"dim\" and \"") + key + "\"");
  }
  const int n = j.at("dim").get<int>();
  const auto flat = j.at(key).get<std::vector<double>>();
  if (n < 1 || flat.size() != static_cast<std::size_t>(n) * static_cast<std::size_t>(n)) {
    throw ValidationError(std::string("json: \"") + key + "\" must hold dim^2 numbers");
  }
  Matrix m(n, n);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < n; ++k) m(i, k) = flat[static_cast<std::size_t>(i) * n + k];
  }
  return m;
}

}  // namespace detail

/// {"dim": n, "gram": row-major n^2 doubles}
inline Json to_json(const QuadraticForm& form) { return detail::square_to_json(form.gram(), "gram"); }
/// {"dim": n, "basis": row-major n^2 doubles}; columns of the matrix are basis vectors.
inline Json to_json(const Lattice& lattice) { return detail::square_to_json(lattice.basis(), "basis"); }

inline QuadraticForm form_from_json(const Json& j) { return QuadraticForm(detail::square_from_json(j, "gram")); }
inline Lattice lattice_from_json(const Json& j) { return Lattice::from_basis(detail::square_from_json(j, "basis")); }

inline Json read_json_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open " + path.string());
  try {
    return Json::parse(in);
  } catch (const Json::exception& e) {
    throw ValidationError("invalid JSON in " + path.string() + ": " + e.what());
  }
}

/// Matrix rows as CSV lines, no header.
inline void write_matrix_csv(std::ostream& out, const Matrix& m) {
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j > 0) out << ',';
      out << format_number(m(i, j));
    }
    out << '\n';
  }
}

inline void write_records_csv(std::ostream& out, std::span<const ExperimentRecord> records) {
  out << "parameter,observed,reference,residual,seed\n";
  for (const auto& r : records) {
    out << format_number(r.parameter) << ',' << format_number(r.observed) << ',' << format_number(r.reference)
        << ',' << format_number(r.residual) << ',' << r.seed << '\n';
  }
}

inline void write_trials_csv(std::ostream& out, std::span<const TrialCount> counts) {
  out << "trial_index,seed,count\n";
  for (const auto& c : counts) out << c.index << ',' << c.seed << ',' << c.count << '\n';
}

inline void write_cq_csv(std::ostream& out, const CqEstimate& estimate) {
  out << "T,volume,std_error,normalized\n";
  for (const auto& row : estimate.rows) {
    out << format_number(row.radius) << ',' << format_number(row.volume) << ',' << format_number(row.std_error)
        << ',' << format_number(row.normalized) << '\n';
  }
}

inline const char* to_string(VolumeMethod method) {
  switch (method) {
    case VolumeMethod::closed_form: return "closed_form";
    case VolumeMethod::monte_carlo: return "monte_carlo";
    case VolumeMethod::thin_shell: return "thin_shell";
  }
  return "unknown";
}

inline Json to_json(const VolumeEstimate& v) {
  return Json{{"value", v.value}, {"std_error", v.std_error}, {"samples", v.samples}, {"method", to_string(v.method)}};
}

inline Json to_json(const SampleStats& s) {
  return Json{{"trials", s.trials}, {"mean", s.mean},         {"variance", s.variance},
              {"std_error", s.std_error}, {"min", s.min}, {"max", s.max}};
}

inline Json to_json(const FitResult& f) {
  return Json{{"slope", f.slope}, {"intercept", f.intercept}, {"r_squared", f.r_squared}, {"points_used", f.points_used}};
}

/// Writes `contents` to a sibling temporary file and renames it over
/// `path`, so readers never observe a partial file.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& contents) {
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw ValidationError("cannot write " + tmp.string());
    out << contents;
    out.flush();
    if (!out) throw ComputationError("write failed for " + tmp.string());
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::filesystem::remove(tmp);
    throw ComputationError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

}  // namespace geonum
