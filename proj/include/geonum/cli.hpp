#pragma once

#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "geonum/enumerate.hpp"
#include "geonum/error.hpp"
#include "geonum/experiments.hpp"
#include "geonum/fit.hpp"
#include "geonum/forms.hpp"
#include "geonum/io.hpp"
#include "geonum/lattice.hpp"
#include "geonum/parallel.hpp"
#include "geonum/region.hpp"
#include "geonum/siegel.hpp"
#include "geonum/volume.hpp"
#include "geonum/zeta.hpp"

#ifndef GEONUM_VERSION
#define GEONUM_VERSION "0.1.0"
#endif

namespace geonum::cli {

inline constexpr int kExitOk = 0;
inline constexpr int kExitValidation = 1;
inline constexpr int kExitComputation = 2;

/// Every flag any subcommand understands. Each subcommand binds the subset
/// it uses; values are validated before any computation starts.
struct RunConfig {
  std::string command;
  int n = 3;
  std::string signature = "2,1";
  std::string sampler = "gm";
  std::uint64_t q_modulus = kDefaultModulus;
  std::uint64_t master_seed = 1;
  std::uint64_t trials = 0;
  std::string output_format = "json";
  std::string output_path;
  unsigned threads = default_threads();
  std::string config_path;

  std::string region = "ball";
  std::string basis_file;
  std::string form_file;
  std::string sides;
  std::string tgrid = "10,20,40,80";
  std::string mode = "two_sided";
  double radius = 1.0;
  double a = 0.0;
  double b = 1.0;
  double volume = 0.0;
  double eps = 0.0;
  double t_max = 0.0;
  double t_min = 0.0;
  double t_step = 2.0;
  double m = 0.0;
  double delta = 0.5;
  double slack = 0.0;
  double eta = kDefaultThinShellEta;
  double f_exponent = 1.0;
  double f_coefficient = 1.0;
  double min_fraction = 0.0;
  std::uint64_t samples = kDefaultVolumeSamples;
  int j_max = 10;
  int forms = 10;
  int points = 7;
  int k_max = 40;
  int k_check = 10;
};

namespace detail {

inline std::vector<double> parse_list(const std::string& text, const char* flag) {
  std::vector<double> values;
  std::stringstream in(text);
  std::string item;
  while (std::getline(in, item, ',')) {
    try {
      std::size_t used = 0;
      values.push_back(std::stod(item, &used));
      if (item.find_first_not_of(" \t", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ValidationError(std::string(flag) + ": not a comma-separated list of numbers: " + text);
    }
  }
  if (values.empty()) throw ValidationError(std::string(flag) + ": empty list");
  return values;
}

inline Signature parse_signature(const std::string& text) {
  const auto v = parse_list(text, "--signature");
  if (v.size() != 2 || v[0] != std::floor(v[0]) || v[1] != std::floor(v[1])) {
    throw ValidationError("--signature must be two integers p,q");
  }
  const Signature s{static_cast<int>(v[0]), static_cast<int>(v[1])};
  if (s.positive < 1 || s.negative < 1) throw ValidationError("--signature must be indefinite (p >= 1 and q >= 1)");
  if (s.dim() < 3) throw ValidationError("--signature requires n = p + q >= 3");
  return s;
}

inline LatticeSampler make_sampler(const RunConfig& c, int min_n) {
  if (c.n < min_n) throw ValidationError("--n must be >= " + std::to_string(min_n) + " for " + c.command);
  LatticeSampler s;
  s.n = c.n;
  s.q = c.q_modulus;
  if (c.sampler == "gm") {
    s.kind = SamplerKind::goldstein_mayer;
    if (c.q_modulus < 101 || !is_prime(c.q_modulus)) throw ValidationError("--q must be a prime >= 101");
  } else if (c.sampler == "gaussian") {
    s.kind = SamplerKind::gaussian;
  } else {
    throw ValidationError("--sampler must be gm or gaussian");
  }
  return s;
}

inline HeightMode parse_mode(const std::string& text) {
  if (text == "two_sided") return HeightMode::two_sided;
  if (text == "positive_side") return HeightMode::positive_side;
  throw ValidationError("--mode must be two_sided or positive_side");
}

inline std::string one_line(std::string text) {
  std::replace(text.begin(), text.end(), '\n', ' ');
  while (!text.empty() && text.back() == ' ') text.pop_back();
  return text;
}

// Resolved value of every option of the subcommand, as strings.
inline Json echo_config(const CLI::App& sub) {
  Json config = Json::object();
  for (const CLI::Option* opt : sub.get_options()) {
    if (opt->get_lnames().empty()) continue;
    const std::string& name = opt->get_lnames().front();
    if (name == "help") continue;
    if (opt->count() > 0) {
      config[name] = opt->as<std::string>();
    } else {
      config[name] = opt->get_default_str();
    }
  }
  return config;
}

inline Json summary_header(const RunConfig& c, const CLI::App& sub) {
  return Json{{"command", c.command}, {"version", GEONUM_VERSION}, {"config", echo_config(sub)}};
}

struct Outputs {
  std::optional<std::string> records_csv;
  Json summary;
};

// Directory output: records.csv and summary.json, each written atomically.
// Without --output the summary goes to stdout.
inline void emit(const RunConfig& c, const Outputs& outputs, std::ostream& out) {
  const std::string summary = outputs.summary.dump(2) + "\n";
  if (c.output_path.empty()) {
    out << summary;
    return;
  }
  const std::filesystem::path dir(c.output_path);
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw ValidationError("cannot create output directory " + dir.string());
  if (outputs.records_csv) write_file_atomic(dir / "records.csv", *outputs.records_csv);
  write_file_atomic(dir / "summary.json", summary);
}

// Single-document output (stdout, or an atomically written file).
inline void emit_document(const RunConfig& c, const std::string& text, std::ostream& out) {
  if (c.output_path.empty()) {
    out << text;
  } else {
    write_file_atomic(c.output_path, text);
  }
}

inline Lattice load_lattice(const RunConfig& c) {
  if (c.basis_file.empty()) {
    if (c.n < 2) throw ValidationError("--n must be >= 2");
    return integer_lattice(c.n);
  }
  return lattice_from_json(read_json_file(c.basis_file));
}

inline QuadraticForm load_form(const RunConfig& c) {
  if (c.form_file.empty()) throw ValidationError("--form-file is required");
  return form_from_json(read_json_file(c.form_file));
}

inline Region build_region(const RunConfig& c, int n) {
  if (c.region == "ball") {
    if (!(c.radius > 0)) throw ValidationError("--T must be > 0");
    return Region::ball(n, c.radius);
  }
  if (c.region == "shell") {
    if (!(c.radius > 0)) throw ValidationError("--T must be > 0");
    if (!(c.a < c.b)) throw ValidationError("--a must be < --b");
    const QuadraticForm form = load_form(c);
    if (form.dim() != n) throw ValidationError("form dimension does not match the lattice");
    return Region::quad_shell(form, c.a, c.b, c.radius);
  }
  if (c.region == "box") {
    if (c.sides.empty()) throw ValidationError("--sides is required for --region box");
    auto sides = parse_list(c.sides, "--sides");
    if (sides.size() == 1) sides.assign(n, sides.front());
    if (static_cast<int>(sides.size()) != n) throw ValidationError("--sides must list one length per dimension");
    return Region::box(sides);
  }
  throw ValidationError("--region must be ball, shell or box");
}

// Region of a given volume for the ensemble statistics commands.
inline Region volume_region(const RunConfig& c) {
  if (!(c.volume > 0)) throw ValidationError("--volume must be > 0");
  if (c.region == "ball") return Region::ball(c.n, symmetrization_radius(c.volume, c.n));
  if (c.region == "box") return Region::cube(c.n, c.volume);
  throw ValidationError("--region must be ball or box");
}

// ---------------------------------------------------------------------------

inline Outputs run_ensemble_stats(const RunConfig& c, const CLI::App& sub, std::ostream&) {
  const LatticeSampler sampler = make_sampler(c, 3);
  const Region region = volume_region(c);
  const std::uint64_t min_trials = c.command == "minkowski" ? 100 : 2;
  if (c.trials < min_trials) throw ValidationError("--trials must be >= " + std::to_string(min_trials));
  if (c.command == "chebyshev" && !(c.m > 0)) throw ValidationError("--M must be > 0");

  const double cn = c_n(c.n);
  const auto counts = siegel_counts(sampler, region, c.trials, c.master_seed, c.threads);
  const SampleStats stats = summarize(counts);

  Json summary = summary_header(c, sub);
  summary["volume"] = c.volume;
  summary["c_n"] = cn;
  summary["stats"] = to_json(stats);
  if (c.command == "siegel-stats") {
    const double tolerance = 3.0 * std::sqrt(cn * c.volume / static_cast<double>(c.trials));
    const double variance_bound = 1.25 * cn * c.volume;
    summary["mean_tolerance"] = tolerance;
    summary["mean_ok"] = std::abs(stats.mean - c.volume) <= tolerance;
    summary["variance_bound"] = variance_bound;
    summary["variance_ok"] = stats.variance <= variance_bound;
    summary["second_moment"] = stats.variance + stats.mean * stats.mean;
    summary["ball_second_moment_reference"] = c.volume * c.volume + cn * c.volume;
  } else if (c.command == "minkowski") {
    const double fraction = hole_fraction(counts);
    const double se = binomial_std_error(fraction, c.trials);
    summary["hole_fraction"] = fraction;
    summary["std_error"] = se;
    summary["bound"] = cn / c.volume;
    summary["threshold"] = cn / c.volume + 3.0 * se;
    summary["pass"] = fraction <= cn / c.volume + 3.0 * se;
  } else {
    const double fraction = tail_fraction(counts, c.volume, c.m);
    const double se = binomial_std_error(fraction, c.trials);
    const double bound = cn / (c.m * c.m);
    summary["tail_fraction"] = fraction;
    summary["std_error"] = se;
    summary["bound"] = bound;
    summary["threshold"] = bound + 3.0 * se;
    summary["pass"] = fraction <= bound + 3.0 * se;
  }
  std::ostringstream csv;
  write_trials_csv(csv, counts);
  return Outputs{csv.str(), std::move(summary)};
}

inline Outputs run_small_values_exp(const RunConfig& c, const CLI::App& sub, std::ostream&) {
  const Signature sig = parse_signature(c.signature);
  const HeightMode mode = parse_mode(c.mode);
  if (c.j_max < 6) throw ValidationError("--jmax must be >= 6");
  if (c.forms < 1) throw ValidationError("--forms must be >= 1");
  if (!(c.t_max > 0)) throw ValidationError("--tmax must be > 0");

  const auto runs = small_values_ensemble(sig, c.forms, c.j_max, mode, c.t_max, c.master_seed, c.threads);
  std::vector<ExperimentRecord> records;
  std::vector<double> slopes;
  Json per_form = Json::array();
  for (const auto& run : runs) {
    records.insert(records.end(), run.result.records.begin(), run.result.records.end());
    Json entry{{"seed", run.seed}, {"censored", run.result.censored}};
    Json censored = Json::array();
    for (const auto& r : run.result.records) {
      if (r.censored) censored.push_back(r.parameter);
    }
    entry["censored_eps"] = censored;
    if (run.result.fit) {
      entry["fit"] = to_json(*run.result.fit);
      slopes.push_back(run.result.fit->slope);
    } else {
      entry["fit"] = nullptr;
    }
    per_form.push_back(entry);
  }
  Json summary = summary_header(c, sub);
  const double theory = 1.0 / (sig.dim() - 2);
  summary["forms"] = per_form;
  summary["theory_exponent"] = theory;
  summary["threshold"] = theory + c.slack;
  if (slopes.empty()) {
    summary["median_slope"] = nullptr;
    summary["pass"] = false;
  } else {
    const double med = median(slopes);
    summary["median_slope"] = med;
    summary["pass"] = med <= theory + c.slack;
  }
  std::ostringstream csv;
  write_records_csv(csv, records);
  return Outputs{csv.str(), std::move(summary)};
}

inline Outputs run_error_term_exp(const RunConfig& c, const CLI::App& sub, std::ostream&) {
  const Signature sig = parse_signature(c.signature);
  if (!(c.a < c.b)) throw ValidationError("--a must be < --b");
  if (!(c.t_min > 0) || !(c.t_max > c.t_min)) throw ValidationError("need 0 < --tmin < --tmax");
  if (c.points < 6) throw ValidationError("--points must be >= 6");
  if (c.forms < 1) throw ValidationError("--forms must be >= 1");
  if (c.samples < kMinVolumeSamples) throw ValidationError("--samples must be >= 10000");
  const auto grid = geometric_grid(c.t_min, c.t_max, c.points);

  const auto runs = error_term_ensemble(sig, c.a, c.b, grid, c.forms, c.samples, c.master_seed, c.threads);
  std::vector<ExperimentRecord> records;
  std::vector<double> exponents;
  Json per_form = Json::array();
  for (const auto& run : runs) {
    records.insert(records.end(), run.result.records.begin(), run.result.records.end());
    const auto& last = run.result.records.back();
    Json entry{{"seed", run.seed},
               {"c_q", run.c_q.c_q},
               {"c_q_std_error", run.c_q.std_error},
               {"main_term_ratio", last.observed / last.reference}};
    if (run.result.residual_fit) {
      entry["residual_fit"] = to_json(*run.result.residual_fit);
      exponents.push_back(run.result.residual_fit->slope);
    } else {
      entry["residual_fit"] = nullptr;
    }
    per_form.push_back(entry);
  }
  Json summary = summary_header(c, sub);
  const double theory = (sig.dim() - 1) / 2.0;
  summary["forms"] = per_form;
  summary["theory_exponent"] = theory;
  summary["threshold"] = theory + c.slack;
  if (exponents.empty()) {
    summary["median_exponent"] = nullptr;
    summary["pass"] = false;
  } else {
    const double med = median(exponents);
    summary["median_exponent"] = med;
    summary["pass"] = med <= theory + c.slack;
  }
  std::ostringstream csv;
  write_records_csv(csv, records);
  return Outputs{csv.str(), std::move(summary)};
}

inline Outputs run_dilates_exp(const RunConfig& c, const CLI::App& sub, std::ostream&) {
  const LatticeSampler sampler = make_sampler(c, 4);
  if (c.trials < 1) throw ValidationError("--trials must be >= 1");
  if (!(c.delta > 0)) throw ValidationError("--delta must be > 0");
  if (!(c.t_min > 0) || !(c.t_max > c.t_min) || !(c.t_step > 0)) {
    throw ValidationError("need 0 < --tmin < --tmax and --tstep > 0");
  }
  Region base;
  if (c.region == "cube" || c.region == "box") {
    base = Region::cube(c.n, 1.0);
  } else if (c.region == "ball") {
    base = Region::ball(c.n, symmetrization_radius(1.0, c.n));
  } else {
    throw ValidationError("--region must be cube or ball");
  }
  std::vector<double> grid;
  for (double t = c.t_min; t <= c.t_max + 1e-9; t += c.t_step) grid.push_back(t);
  if (grid.size() < 2) throw ValidationError("t grid needs at least 2 points");

  const auto result = dilates_experiment(sampler, base, grid, c.delta, c.trials, c.master_seed, c.threads);
  Json summary = summary_header(c, sub);
  Json verdicts = Json::array();
  for (const auto& v : result.verdicts) verdicts.push_back(Json{{"seed", v.seed}, {"passed", v.passed}});
  summary["exponent"] = 2.0 * c.n / 3.0 + c.delta;
  summary["verdicts"] = verdicts;
  summary["pass_fraction"] = result.pass_fraction;
  summary["required_fraction"] = c.min_fraction;
  summary["pass"] = result.pass_fraction >= c.min_fraction;
  std::ostringstream csv;
  write_records_csv(csv, result.records);
  return Outputs{csv.str(), std::move(summary)};
}

inline Outputs run_sequences_exp(const RunConfig& c, const CLI::App& sub, std::ostream&) {
  const LatticeSampler sampler = make_sampler(c, 3);
  if (c.trials < 1) throw ValidationError("--trials must be >= 1");
  if (c.k_max < 1) throw ValidationError("--kmax must be >= 1");
  const PowerGrowth growth(c.f_coefficient, c.f_exponent);
  const int n = c.n;
  const std::function<Region(int)> sets = [n](int k) {
    return Region::ball(n, symmetrization_radius(static_cast<double>(k), n));
  };
  const auto result = sequences_experiment(sampler, sets, growth, c.k_max, c.trials, c.master_seed, c.threads);
  const double settled = fraction_settled_by(result.last_violation, c.k_check);
  Json summary = summary_header(c, sub);
  Json lattices = Json::array();
  for (std::size_t i = 0; i < result.seeds.size(); ++i) {
    lattices.push_back(Json{{"seed", result.seeds[i]}, {"last_violation", result.last_violation[i]}});
  }
  summary["lattices"] = lattices;
  summary["settled_fraction"] = settled;
  summary["required_fraction"] = c.min_fraction;
  summary["pass"] = settled >= c.min_fraction;
  std::ostringstream csv;
  write_records_csv(csv, result.records);
  return Outputs{csv.str(), std::move(summary)};
}

// Turns `key = value` lines into `--key value` arguments.
inline std::vector<std::string> read_config_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path);
  std::vector<std::string> args;
  std::string line;
  while (std::getline(in, line)) {
    const auto start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ValidationError("config file: expected key = value: " + line);
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      const auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    const std::string key = trim(line.substr(0, eq));
    if (key.empty() || key == "config") throw ValidationError("config file: invalid key in: " + line);
    args.push_back("--" + key);
    args.push_back(trim(line.substr(eq + 1)));
  }
  return args;
}

// Config-file arguments go right after the subcommand name so that
// explicit flags, which come later, take precedence.
inline std::vector<std::string> expand_config(std::vector<std::string> args) {
  std::optional<std::string> path;
  for (std::size_t i = 1; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) path = args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) path = args[i].substr(9);
  }
  if (!path || args.size() < 2) return args;
  const auto extra = read_config_file(*path);
  args.insert(args.begin() + 2, extra.begin(), extra.end());
  return args;
}

}  // namespace detail

/// Parses `args` (args[0] is the program name), runs one subcommand and
/// returns the process exit code: 0 success, 1 validation error, 2
/// computational error. Diagnostics are single lines on `err`.
inline int parse_and_dispatch(std::vector<std::string> args, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  RunConfig c;
  CLI::App app{"Random lattices, quadratic forms and lattice-point statistics", "geonum"};
  app.require_subcommand(1);
  app.option_defaults()->always_capture_default()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  using Handler = std::function<detail::Outputs(const RunConfig&, const CLI::App&, std::ostream&)>;
  std::map<std::string, Handler> handlers;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--seed", c.master_seed, "Master seed");
    sub->add_option("--threads", c.threads, "Worker threads")->check(CLI::PositiveNumber);
    sub->add_option("--output", c.output_path, "Output path");
    sub->add_option("--config", c.config_path, "key = value config file; flags override it");
  };
  auto sampler_flags = [&](CLI::App* sub, bool n_required) {
    auto* opt = sub->add_option("--n", c.n, "Dimension");
    if (n_required) opt->required();
    sub->add_option("--sampler", c.sampler, "Lattice sampler: gm or gaussian");
    sub->add_option("--q", c.q_modulus, "Prime modulus of the gm sampler");
  };

  // Per-subcommand defaults for shared fields, applied when the subcommand
  // is selected. default_val() would write the shared field immediately.
  std::map<CLI::App*, std::vector<std::function<void()>>> presets;
  auto preset = [&](CLI::App* sub, CLI::Option* opt, auto& field, auto value) {
    using Field = std::remove_reference_t<decltype(field)>;
    const Field typed = static_cast<Field>(value);
    std::ostringstream text;
    text << typed;
    opt->default_str(text.str());
    presets[sub].push_back([&field, typed] { field = typed; });
  };

  // Simple commands write their own output and register a null handler.
  std::function<void()> simple;

  auto* sample = app.add_subcommand("sample-lattice", "Draw one random unimodular lattice");
  sampler_flags(sample, false);
  common(sample);
  sample->add_option("--format", c.output_format, "json or csv");
  sample->callback([&] {
    simple = [&] {
      const LatticeSampler sampler = detail::make_sampler(c, 2);
      if (c.output_format != "json" && c.output_format != "csv") throw ValidationError("--format must be json or csv");
      const Lattice lattice = sampler(c.master_seed);
      std::ostringstream doc;
      if (c.output_format == "json") {
        doc << to_json(lattice).dump() << '\n';
      } else {
        write_matrix_csv(doc, lattice.basis());
      }
      detail::emit_document(c, doc.str(), out);
    };
  });

  auto* count = app.add_subcommand("count", "Count nonzero lattice points in a region");
  count->add_option("--basis-file", c.basis_file, "Lattice JSON {dim, basis}; default Z^n");
  count->add_option("--n", c.n, "Dimension of Z^n when no basis file is given");
  count->add_option("--region", c.region, "ball, shell or box")->required();
  count->add_option("--T", c.radius, "Radius of the ball or shell");
  count->add_option("--form-file", c.form_file, "Form JSON {dim, gram} for the shell");
  count->add_option("--a", c.a, "Shell lower value");
  count->add_option("--b", c.b, "Shell upper value");
  count->add_option("--sides", c.sides, "Box side lengths, comma separated");
  common(count);
  count->callback([&] {
    simple = [&] {
      const Lattice lattice = detail::load_lattice(c);
      const Region region = detail::build_region(c, lattice.dim());
      detail::emit_document(c, std::to_string(count_region(lattice, region)) + "\n", out);
    };
  });

  auto* small = app.add_subcommand("small-values", "Minimal-height x in Z^n with small |Q(x)|");
  small->add_option("--form-file", c.form_file, "Form JSON {dim, gram}")->required();
  small->add_option("--eps", c.eps, "Threshold eps > 0")->required();
  small->add_option("--mode", c.mode, "two_sided or positive_side");
  small->add_option("--tmax", c.t_max, "Search radius cap")->required();
  common(small);
  small->callback([&] {
    simple = [&] {
      if (!(c.eps > 0)) throw ValidationError("--eps must be > 0");
      if (!(c.t_max > 0)) throw ValidationError("--tmax must be > 0");
      const HeightMode mode = detail::parse_mode(c.mode);
      const QuadraticForm form = detail::load_form(c);
      const auto solution = min_height_solution(form, c.eps, mode, c.t_max);
      Json doc = solution ? Json{{"found", true}, {"x", solution->x}, {"height", solution->height},
                                 {"value", solution->value}}
                          : Json{{"found", false}, {"x", nullptr}, {"height", nullptr}, {"value", nullptr}};
      detail::emit_document(c, doc.dump() + "\n", out);
    };
  });

  auto* volume = app.add_subcommand("volume", "Monte Carlo volume of a region");
  volume->add_option("--region", c.region, "ball, shell or box")->required();
  volume->add_option("--n", c.n, "Dimension (ball and box)");
  volume->add_option("--T", c.radius, "Radius of the ball or shell");
  volume->add_option("--form-file", c.form_file, "Form JSON for the shell");
  volume->add_option("--a", c.a, "Shell lower value");
  volume->add_option("--b", c.b, "Shell upper value");
  volume->add_option("--sides", c.sides, "Box side lengths, comma separated");
  volume->add_option("--samples", c.samples, "Monte Carlo samples");
  volume->add_option("--format", c.output_format, "json or csv");
  common(volume);
  volume->callback([&] {
    simple = [&] {
      if (c.samples < kMinVolumeSamples) throw ValidationError("--samples must be >= 10000");
      if (c.output_format != "json" && c.output_format != "csv") throw ValidationError("--format must be json or csv");
      int n = c.n;
      if (c.region == "shell") n = detail::load_form(c).dim();
      if (n < 1) throw ValidationError("--n must be >= 1");
      const Region region = detail::build_region(c, n);
      const VolumeEstimate est = mc_volume(region, c.samples, c.master_seed, c.threads);
      std::ostringstream doc;
      if (c.output_format == "json") {
        Json j = to_json(est);
        if (region.volume_hint) j["closed_form"] = *region.volume_hint;
        doc << j.dump() << '\n';
      } else {
        doc << "value,std_error,samples,method\n"
            << format_number(est.value) << ',' << format_number(est.std_error) << ',' << est.samples << ','
            << to_string(est.method) << '\n';
      }
      detail::emit_document(c, doc.str(), out);
    };
  });

  auto* cq = app.add_subcommand("cq", "Estimate the counting constant c_Q");
  cq->add_option("--form-file", c.form_file, "Form JSON {dim, gram}")->required();
  cq->add_option("--a", c.a, "Lower value");
  cq->add_option("--b", c.b, "Upper value");
  cq->add_option("--tgrid", c.tgrid, "Increasing radii, comma separated (>= 4)");
  cq->add_option("--samples", c.samples, "Monte Carlo samples per radius");
  cq->add_option("--format", c.output_format, "csv or json");
  common(cq);
  cq->callback([&] {
    simple = [&] {
      if (!(c.a < c.b)) throw ValidationError("--a must be < --b");
      if (c.samples < kMinVolumeSamples) throw ValidationError("--samples must be >= 10000");
      if (c.output_format != "json" && c.output_format != "csv") throw ValidationError("--format must be json or csv");
      const auto grid = detail::parse_list(c.tgrid, "--tgrid");
      const QuadraticForm form = detail::load_form(c);
      const CqEstimate est = c_q_estimate(form, c.a, c.b, grid, c.samples, c.master_seed, c.threads);
      std::ostringstream doc;
      if (c.output_format == "csv") {
        write_cq_csv(doc, est);
      } else {
        Json rows = Json::array();
        for (const auto& r : est.rows) {
          rows.push_back(Json{{"T", r.radius}, {"volume", r.volume}, {"std_error", r.std_error},
                              {"normalized", r.normalized}, {"residual", r.residual}});
        }
        doc << Json{{"c_q", est.c_q}, {"std_error", est.std_error}, {"rows", rows}}.dump() << '\n';
      }
      detail::emit_document(c, doc.str(), out);
    };
  });

  auto ensemble = [&](const char* name, const char* help, std::uint64_t default_trials) {
    auto* sub = app.add_subcommand(name, help);
    sampler_flags(sub, true);
    sub->add_option("--region", c.region, "ball or box");
    sub->add_option("--volume", c.volume, "Region volume")->required();
    preset(sub, sub->add_option("--trials", c.trials, "Number of sampled lattices"), c.trials, default_trials);
    common(sub);
    handlers[name] = detail::run_ensemble_stats;
    return sub;
  };
  ensemble("siegel-stats", "Mean and variance of lattice counts over random lattices", 2000);
  ensemble("minkowski", "Hole probability against C_n / |A|", 1000);
  auto* cheb = ensemble("chebyshev", "Concentration tail against C_n M^-2", 2000);
  cheb->add_option("--M", c.m, "Deviation multiple M > 0")->required();

  auto* sve = app.add_subcommand("small-values-exp", "Height exponent over random forms");
  sve->add_option("--signature", c.signature, "p,q");
  sve->add_option("--forms", c.forms, "Number of random forms");
  sve->add_option("--jmax", c.j_max, "Smallest eps is 2^-jmax");
  sve->add_option("--mode", c.mode, "two_sided or positive_side");
  preset(sve, sve->add_option("--tmax", c.t_max, "Search radius cap"), c.t_max, 300.0);
  preset(sve, sve->add_option("--slack", c.slack, "Allowed excess over 1/(n-2)"), c.slack, 0.2);
  common(sve);
  handlers["small-values-exp"] = detail::run_small_values_exp;

  auto* ete = app.add_subcommand("error-term-exp", "Error-term exponent of N(Q,a,b,T) over random forms");
  ete->add_option("--signature", c.signature, "p,q");
  ete->add_option("--a", c.a, "Lower value");
  ete->add_option("--b", c.b, "Upper value");
  preset(ete, ete->add_option("--tmin", c.t_min, "Smallest T"), c.t_min, 10.0);
  preset(ete, ete->add_option("--tmax", c.t_max, "Largest T"), c.t_max, 80.0);
  ete->add_option("--points", c.points, "Geometric grid size (>= 6)");
  ete->add_option("--forms", c.forms, "Number of random forms");
  preset(ete, ete->add_option("--samples", c.samples, "Monte Carlo samples per radius for c_Q"), c.samples, 2'000'000);
  preset(ete, ete->add_option("--slack", c.slack, "Allowed excess over (n-1)/2"), c.slack, 0.5);
  common(ete);
  handlers["error-term-exp"] = detail::run_error_term_exp;

  auto* dil = app.add_subcommand("dilates-exp", "Dilate counting over random lattices");
  sampler_flags(dil, false);
  preset(dil, dil->add_option("--trials", c.trials, "Number of sampled lattices"), c.trials, 100);
  preset(dil, dil->add_option("--region", c.region, "cube or ball (volume 1)"), c.region, std::string("cube"));
  dil->add_option("--delta", c.delta, "Exponent slack delta > 0");
  preset(dil, dil->add_option("--tmin", c.t_min, "Smallest t"), c.t_min, 5.0);
  preset(dil, dil->add_option("--tmax", c.t_max, "Largest t"), c.t_max, 25.0);
  dil->add_option("--tstep", c.t_step, "Grid step");
  preset(dil, dil->add_option("--min-pass", c.min_fraction, "Required pass fraction"), c.min_fraction, 0.9);
  common(dil);
  handlers["dilates-exp"] = detail::run_dilates_exp;

  auto* seq = app.add_subcommand("sequences-exp", "Counting in balls of volume k over random lattices");
  sampler_flags(seq, false);
  preset(seq, seq->add_option("--trials", c.trials, "Number of sampled lattices"), c.trials, 100);
  seq->add_option("--kmax", c.k_max, "Largest k");
  seq->add_option("--f-exponent", c.f_exponent, "f(k) = coefficient * k^exponent, exponent > 1/2");
  seq->add_option("--f-coefficient", c.f_coefficient, "f(k) coefficient");
  seq->add_option("--kcheck", c.k_check, "Lattices must settle before this k");
  preset(seq, seq->add_option("--min-settled", c.min_fraction, "Required settled fraction"), c.min_fraction, 0.95);
  common(seq);
  handlers["sequences-exp"] = detail::run_sequences_exp;

  for (auto& [sub, setters] : presets) {
    sub->preparse_callback([&setters = setters](std::size_t) {
      for (const auto& set : setters) set();
    });
  }

  try {
    try {
      args = detail::expand_config(std::move(args));
    } catch (const ValidationError& e) {
      err << "error: " << detail::one_line(e.what()) << '\n';
      return kExitValidation;
    }
    std::vector<std::string> reversed(args.rbegin(), args.rend() - 1);
    app.parse(reversed);
  } catch (const CLI::CallForHelp&) {
    out << app.help();
    return kExitOk;
  } catch (const CLI::CallForAllHelp&) {
    out << app.help("", CLI::AppFormatMode::All);
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    err << "error: " << detail::one_line(e.what()) << '\n';
    return kExitValidation;
  } catch (const ValidationError& e) {
    err << "error: " << detail::one_line(e.what()) << '\n';
    return kExitValidation;
  }

  const CLI::App* chosen = app.get_subcommands().front();
  c.command = chosen->get_name();
  try {
    if (simple) {
      simple();
    } else {
      detail::emit(c, handlers.at(c.command)(c, *chosen, out), out);
    }
  } catch (const ValidationError& e) {
    err << "error: " << detail::one_line(e.what()) << '\n';
    return kExitValidation;
  } catch (const Json::exception& e) {
    err << "error: " << detail::one_line(e.what()) << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    err << "error: " << detail::one_line(e.what()) << '\n';
    return kExitComputation;
  }
  return kExitOk;
}

inline int parse_and_dispatch(int argc, const char* const* argv, std::ostream& out = std::cout,
                              std::ostream& err = std::cerr) {
  return parse_and_dispatch(std::vector<std::string>(argv, argv + argc), out, err);
}

}  // namespace geonum::cli
