// Acceptance suite: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails. Tolerances and run sizes are fixed here.

#include <chrono>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numbers>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "geonum/cli.hpp"
#include "geonum/experiments.hpp"
#include "geonum/siegel.hpp"
#include "oracles.hpp"

using namespace geonum;

namespace {

constexpr std::uint64_t kSeed = 20240611;
constexpr std::uint64_t kModulus = 1'000'003;

// 1-4
constexpr double kMeanVolume = 20.0;
constexpr double kMeanTolerance = 1.5;
constexpr std::uint64_t kMeanTrials = 2000;
constexpr double kVarianceFactor = 1.25;
constexpr double kC3Reference = 10.9474;
constexpr double kC3Tolerance = 1e-12;
constexpr double kHoleVolume = 50.0;
constexpr std::uint64_t kHoleTrials = 1000;
constexpr double kTailVolume = 20.0;
constexpr double kTailM = 10.0;
constexpr std::uint64_t kTailTrials = 2000;
constexpr double kStdErrors = 3.0;

// 5
constexpr int kHeightForms = 10;
constexpr int kHeightJmax4 = 12;
constexpr double kHeightTmax4 = 80.0;
constexpr double kHeightSlopeMax4 = 0.7;
constexpr int kHeightJmax3 = 10;
constexpr double kHeightTmax3 = 400.0;
constexpr double kHeightSlopeMax3 = 1.2;

// 6-7
constexpr int kErrorForms = 10;
constexpr double kErrorTmin = 10.0;
constexpr double kErrorTmax = 80.0;
constexpr int kErrorPoints = 7;
constexpr std::uint64_t kCqSamples = 4'000'000;
constexpr double kMainTermLow = 0.8;
constexpr double kMainTermHigh = 1.2;
constexpr double kErrorExponentMax = 1.5;

// 8
constexpr std::uint64_t kDilateLattices = 100;
constexpr double kDilateDelta = 0.5;
constexpr double kDilateTmin = 5.0;
constexpr double kDilateTmax = 25.0;
constexpr double kDilateStep = 2.0;
constexpr double kDilatePassFraction = 0.9;

// 9
constexpr int kOracleLattices = 50;

struct Outcome {
  bool pass;
  std::string detail;
};

std::string fmt(const char* format, auto... args) {
  char buffer[512];
  std::snprintf(buffer, sizeof buffer, format, args...);
  return buffer;
}

Outcome siegel_mean(const std::vector<TrialCount>& counts) {
  const auto s = summarize(counts);
  return {std::abs(s.mean - kMeanVolume) <= kMeanTolerance,
          fmt("mean %.4f, target %.1f +- %.1f over %llu gm lattices (n=3, q=%llu)", s.mean, kMeanVolume,
              kMeanTolerance, static_cast<unsigned long long>(counts.size()),
              static_cast<unsigned long long>(kModulus))};
}

Outcome rogers_variance(const std::vector<TrialCount>& counts) {
  const auto s = summarize(counts);
  const double c3 = c_n(3);
  const double c3_oracle = 8.0 * oracle::kZeta2 / oracle::kZeta3;
  const bool constant_ok = std::abs(c3 - c3_oracle) <= kC3Tolerance && std::abs(c3 - kC3Reference) < 1e-4;
  const double bound = kVarianceFactor * c3 * kMeanVolume;
  return {constant_ok && s.variance <= bound,
          fmt("variance %.3f <= %.3f (1.25 C_3 a); C_3 = %.13f, |C_3 - 8 zeta(2)/zeta(3)| = %.1e", s.variance, bound,
              c3, std::abs(c3 - c3_oracle))};
}

Outcome random_minkowski(const LatticeSampler& sampler) {
  const auto region = Region::ball(3, symmetrization_radius(kHoleVolume, 3));
  const auto counts = siegel_counts(sampler, region, kHoleTrials, derive_seed(kSeed, 3), default_threads());
  const double fraction = hole_fraction(counts);
  const double threshold = c_n(3) / kHoleVolume + kStdErrors * binomial_std_error(fraction, kHoleTrials);
  return {fraction <= threshold, fmt("hole fraction %.4f <= %.4f (C_3/50 + 3 se, %llu trials)", fraction, threshold,
                                     static_cast<unsigned long long>(kHoleTrials))};
}

Outcome chebyshev(const LatticeSampler& sampler) {
  const auto region = Region::ball(3, symmetrization_radius(kTailVolume, 3));
  const auto counts = siegel_counts(sampler, region, kTailTrials, derive_seed(kSeed, 4), default_threads());
  const double fraction = tail_fraction(counts, kTailVolume, kTailM);
  const double threshold = c_n(3) / (kTailM * kTailM) + kStdErrors * binomial_std_error(fraction, kTailTrials);
  return {fraction <= threshold, fmt("tail fraction %.4f <= %.4f (C_3/M^2 + 3 se, M=10, %llu trials)", fraction,
                                     threshold, static_cast<unsigned long long>(kTailTrials))};
}

double median_slope(const std::vector<SmallValuesRun>& runs, int& censored, int& unfitted) {
  std::vector<double> slopes;
  for (const auto& run : runs) {
    censored += run.result.censored;
    if (run.result.fit) {
      slopes.push_back(run.result.fit->slope);
    } else {
      ++unfitted;
    }
  }
  return slopes.empty() ? std::numeric_limits<double>::infinity() : median(slopes);
}

Outcome height_exponent() {
  int censored4 = 0;
  int unfitted4 = 0;
  int censored3 = 0;
  int unfitted3 = 0;
  const auto runs4 = small_values_ensemble({3, 1}, kHeightForms, kHeightJmax4, HeightMode::two_sided, kHeightTmax4,
                                           derive_seed(kSeed, 5), default_threads());
  const auto runs3 = small_values_ensemble({2, 1}, kHeightForms, kHeightJmax3, HeightMode::two_sided, kHeightTmax3,
                                           derive_seed(kSeed, 55), default_threads());
  const double s4 = median_slope(runs4, censored4, unfitted4);
  const double s3 = median_slope(runs3, censored3, unfitted3);
  return {s4 <= kHeightSlopeMax4 && s3 <= kHeightSlopeMax3,
          fmt("n=4 median slope %.3f <= %.1f (%d censored eps, T_max %.0f); n=3 median slope %.3f <= %.1f "
              "(%d censored eps, T_max %.0f)",
              s4, kHeightSlopeMax4, censored4, kHeightTmax4, s3, kHeightSlopeMax3, censored3, kHeightTmax3)};
}

Outcome main_term(const std::vector<ErrorTermRun>& runs) {
  std::vector<double> ratios;
  int in_band = 0;
  for (const auto& run : runs) {
    const auto& last = run.result.records.back();
    const double ratio = last.observed / last.reference;
    ratios.push_back(ratio);
    in_band += ratio >= kMainTermLow && ratio <= kMainTermHigh ? 1 : 0;
  }
  const double med = median(ratios);
  return {med >= kMainTermLow && med <= kMainTermHigh,
          fmt("median N/(c_Q T) at T=80 is %.4f in [0.8, 1.2]; %d of %zu forms individually in band", med, in_band,
              runs.size())};
}

Outcome error_exponent(const std::vector<ErrorTermRun>& runs) {
  std::vector<double> exponents;
  for (const auto& run : runs) {
    if (run.result.residual_fit) exponents.push_back(run.result.residual_fit->slope);
  }
  if (exponents.size() * 2 < runs.size()) return {false, "too few forms with a residual fit"};
  const double med = median(exponents);
  return {med <= kErrorExponentMax, fmt("median |residual| exponent %.3f <= %.1f over %zu forms (T in [10, 80])", med,
                                        kErrorExponentMax, exponents.size())};
}

Outcome dilates() {
  const LatticeSampler sampler{SamplerKind::goldstein_mayer, 4, kModulus};
  std::vector<double> grid;
  for (double t = kDilateTmin; t <= kDilateTmax + 1e-9; t += kDilateStep) grid.push_back(t);
  const auto result = dilates_experiment(sampler, Region::cube(4, 1.0), grid, kDilateDelta, kDilateLattices,
                                         derive_seed(kSeed, 8), default_threads());
  return {result.pass_fraction >= kDilatePassFraction,
          fmt("%.2f of %llu lattices satisfy |N - t^4| < t^(8/3+0.5) for t in [%.0f, %.0f]", result.pass_fraction,
              static_cast<unsigned long long>(kDilateLattices), grid[grid.size() / 2], grid.back())};
}

Outcome oracle_equivalence() {
  int mismatches = 0;
  std::size_t points = 0;
  for (int i = 0; i < kOracleLattices; ++i) {
    const int n = 3 + i % 3;
    const std::uint64_t seed = derive_seed(kSeed, 900 + i);
    const Lattice raw = i % 2 == 0 ? goldstein_mayer(n, kModulus, seed) : gaussian_unimodular(n, seed);
    const Lattice lattice = lll_reduce(raw);
    const double radius = n == 5 ? 3.0 : 4.0;
    const Matrix inverse = lattice.basis().inverse();
    auto keys = [&](const std::vector<Vector>& vs) {
      std::set<std::vector<long long>> out;
      for (const auto& v : vs) {
        const Vector c = inverse * v;
        std::vector<long long> k;
        for (Eigen::Index j = 0; j < c.size(); ++j) k.push_back(std::llround(c(j)));
        out.insert(k);
      }
      return out;
    };
    const auto expected = keys(oracle::box_scan_ball(lattice.basis(), radius));
    const auto got = keys(points_in_ball(raw, radius));
    points += expected.size();
    mismatches += got == expected ? 0 : 1;
  }
  int shell_mismatches = 0;
  const auto cone = standard_form(2, 1);
  const std::uint64_t cone_count = count_region(integer_lattice(3), Region::quad_shell(cone, -0.5, 0.5, 2.5));
  for (const double t : {2.5, 4.0, 7.5}) {
    for (const auto& [a, b] : {std::pair{-0.5, 0.5}, {0.5, 3.5}, {-2.5, -0.5}}) {
      const auto expected = oracle::zn_count(3, t, [&](const oracle::Coeffs& x) {
        const double v = static_cast<double>(x[0] * x[0] + x[1] * x[1] - x[2] * x[2]);
        return a < v && v < b;
      });
      const auto got = count_region(integer_lattice(3), Region::quad_shell(cone, a, b, t));
      shell_mismatches += static_cast<std::int64_t>(got) == expected ? 0 : 1;
    }
  }
  return {mismatches == 0 && shell_mismatches == 0 && cone_count == 8,
          fmt("%d/%d lattice point sets differ from box scan (%zu points); %d/9 Z^3 shell counts differ; "
              "cone shell T=2.5 count %llu (expected 8)",
              mismatches, kOracleLattices, points, shell_mismatches, static_cast<unsigned long long>(cone_count))};
}

std::string read_file(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

Outcome determinism() {
  namespace fs = std::filesystem;
  const fs::path root = fs::temp_directory_path() / "geonum_acceptance_determinism";
  fs::remove_all(root);
  const std::vector<std::vector<std::string>> commands{
      {"small-values-exp", "--signature", "3,1", "--forms", "4", "--jmax", "8", "--tmax", "30"},
      {"error-term-exp", "--signature", "2,1", "--forms", "3", "--tmin", "5", "--tmax", "30", "--points", "6",
       "--samples", "100000"},
      {"dilates-exp", "--n", "4", "--trials", "10", "--tmin", "3", "--tmax", "11"},
      {"sequences-exp", "--n", "3", "--trials", "20", "--kmax", "30"},
      {"siegel-stats", "--n", "3", "--volume", "20", "--trials", "100"}};
  int identical = 0;
  std::string failures;
  for (const auto& base : commands) {
    std::vector<std::string> texts;
    for (const char* threads : {"1", "3", "1"}) {
      const fs::path out = root / (base.front() + "_" + threads + "_" + std::to_string(texts.size()));
      std::vector<std::string> args{"geonum"};
      args.insert(args.end(), base.begin(), base.end());
      args.insert(args.end(), {"--seed", "4242", "--threads", threads, "--output", out.string()});
      std::ostringstream sink;
      std::ostringstream err;
      if (cli::parse_and_dispatch(args, sink, err) != 0) failures += " " + base.front() + " failed: " + err.str();
      texts.push_back(read_file(out / "records.csv"));
    }
    if (!texts[0].empty() && texts[0] == texts[1] && texts[0] == texts[2]) {
      ++identical;
    } else {
      failures += " " + base.front();
    }
  }
  fs::remove_all(root);
  const int total = static_cast<int>(commands.size());
  return {identical == total,
          fmt("%d/%d commands produce byte-identical records.csv across reruns and --threads 1/3%s", identical, total,
              failures.empty() ? "" : (";" + failures).c_str())};
}

}  // namespace

int main() {
  using Clock = std::chrono::steady_clock;
  int failed = 0;
  auto report = [&](int id, const char* name, const std::function<Outcome()>& check) {
    const auto start = Clock::now();
    Outcome outcome;
    try {
      outcome = check();
    } catch (const std::exception& e) {
      outcome = {false, std::string("exception: ") + e.what()};
    }
    const double seconds = std::chrono::duration<double>(Clock::now() - start).count();
    std::printf("criterion %2d %s %-22s %s [%.1fs]\n", id, outcome.pass ? "PASS" : "FAIL", name,
                outcome.detail.c_str(), seconds);
    std::fflush(stdout);
    failed += outcome.pass ? 0 : 1;
  };

  const LatticeSampler gm{SamplerKind::goldstein_mayer, 3, kModulus};
  std::vector<TrialCount> mean_counts;
  auto counts = [&]() -> const std::vector<TrialCount>& {
    if (mean_counts.empty()) {
      mean_counts = siegel_counts(gm, Region::ball(3, symmetrization_radius(kMeanVolume, 3)), kMeanTrials,
                                  derive_seed(kSeed, 1), default_threads());
    }
    return mean_counts;
  };
  std::vector<ErrorTermRun> error_runs;
  auto error_ensemble = [&]() -> const std::vector<ErrorTermRun>& {
    if (error_runs.empty()) {
      const auto grid = geometric_grid(kErrorTmin, kErrorTmax, kErrorPoints);
      error_runs = error_term_ensemble({2, 1}, 0.0, 1.0, grid, kErrorForms, kCqSamples, derive_seed(kSeed, 6),
                                       default_threads());
    }
    return error_runs;
  };

  report(1, "siegel-mean", [&] { return siegel_mean(counts()); });
  report(2, "rogers-variance", [&] { return rogers_variance(counts()); });
  report(3, "random-minkowski", [&] { return random_minkowski(gm); });
  report(4, "chebyshev-tail", [&] { return chebyshev(gm); });
  report(5, "height-exponent", height_exponent);
  report(6, "counting-main-term", [&] { return main_term(error_ensemble()); });
  report(7, "error-term-exponent", [&] { return error_exponent(error_ensemble()); });
  report(8, "dilates", dilates);
  report(9, "oracle-equivalence", oracle_equivalence);
  report(10, "determinism", determinism);

  std::printf("%d of 10 criteria passed\n", 10 - failed);
  return failed == 0 ? 0 : 1;
}
