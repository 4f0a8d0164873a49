#include "phyto/features.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <memory>
#include <mutex>
#include <numeric>
#include <optional>

#include <fftw3.h>
#include <json.hpp>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"

namespace phyto::features {

std::vector<std::string> FeatureCatalog::names() const {
  std::vector<std::string> out;
  out.reserve(features.size());
  for (const auto& f : features) out.push_back(f.name);
  return out;
}

namespace {

FeatureCatalog make_v1() {
  using K = FeatureKind;
  FeatureCatalog c;
  c.version = "v1";
  auto add = [&](std::string name, K kind, double param = 0.0) { c.features.push_back({std::move(name), kind, param}); };
  add("mean", K::Mean);
  add("variance", K::Variance);
  add("standard_deviation", K::StdDev);
  add("skewness", K::Skewness);
  add("kurtosis", K::Kurtosis);
  add("minimum", K::Minimum);
  add("maximum", K::Maximum);
  add("median", K::Median);
  for (double q : {0.05, 0.1, 0.25, 0.75, 0.9, 0.95}) {
    add("quantile_q" + csv::format_double(q), K::Quantile, q);
  }
  add("range", K::Range);
  add("root_mean_square", K::RootMeanSquare);
  add("abs_energy", K::AbsEnergy);
  add("mean_abs_change", K::MeanAbsChange);
  add("mean_change", K::MeanChange);
  add("mean_second_derivative_central", K::MeanSecondDerivativeCentral);
  add("zero_crossings", K::ZeroCrossings);
  add("count_above_mean", K::CountAboveMean);
  add("count_below_mean", K::CountBelowMean);
  add("longest_strike_above_mean", K::LongestStrikeAboveMean);
  add("longest_strike_below_mean", K::LongestStrikeBelowMean);
  add("number_peaks_n5", K::NumberOfPeaks, 5);
  for (int lag : {1, 10, 60, 300, 900}) add("autocorrelation_lag" + std::to_string(lag), K::Autocorrelation, lag);
  add("partial_sum_half_ratio", K::PartialSumHalfRatio);
  add("linear_trend_slope", K::LinearTrendSlope);
  add("linear_trend_intercept", K::LinearTrendIntercept);
  add("linear_trend_r2", K::LinearTrendR2);
  add("binned_entropy_b10", K::BinnedEntropy, 10);
  add("cid_ce_normalized", K::CidCeNormalized);
  add("cid_ce", K::CidCe);
  add("spectral_centroid", K::SpectralCentroid);
  add("spectral_variance", K::SpectralVariance);
  for (int b = 0; b < 3; ++b) add("band_power_fraction_" + std::to_string(b), K::BandPowerFraction, b);
  add("first_value", K::FirstValue);
  add("last_value", K::LastValue);
  add("absolute_sum_of_changes", K::AbsoluteSumOfChanges);
  add("ratio_beyond_1_sigma", K::RatioBeyondSigma, 1);
  add("ratio_beyond_2_sigma", K::RatioBeyondSigma, 2);
  add("index_of_max", K::IndexOfMax);
  add("index_of_min", K::IndexOfMin);
  return c;
}

/// FFTW plans are created once per length; plan creation is not thread-safe
/// but executing an existing plan on fresh aligned buffers is.
class PeriodogramPlans {
 public:
  std::vector<double> power(std::span<const double> centered) {
    const int n = static_cast<int>(centered.size());
    fftw_plan plan = plan_for(n);
    double* in = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    std::copy(centered.begin(), centered.end(), in);
    fftw_execute_dft_r2c(plan, in, out);
    std::vector<double> p(static_cast<std::size_t>(n / 2 + 1));
    for (int k = 0; k <= n / 2; ++k) p[static_cast<std::size_t>(k)] = out[k][0] * out[k][0] + out[k][1] * out[k][1];
    fftw_free(in);
    fftw_free(out);
    return p;
  }

  ~PeriodogramPlans() {
    for (auto& [n, plan] : plans_) fftw_destroy_plan(plan);
  }

 private:
  fftw_plan plan_for(int n) {
    std::lock_guard lock(mu_);
    auto it = plans_.find(n);
    if (it != plans_.end()) return it->second;
    double* in = fftw_alloc_real(static_cast<std::size_t>(n));
    fftw_complex* out = fftw_alloc_complex(static_cast<std::size_t>(n / 2 + 1));
    fftw_plan plan = fftw_plan_dft_r2c_1d(n, in, out, FFTW_ESTIMATE);
    fftw_free(in);
    fftw_free(out);
    plans_.emplace(n, plan);
    return plan;
  }

  std::mutex mu_;
  std::map<int, fftw_plan> plans_;
};

PeriodogramPlans& periodogram_plans() {
  static PeriodogramPlans plans;
  return plans;
}

/// Lazily computed statistics shared by the catalog entries of one window.
class WindowContext {
 public:
  explicit WindowContext(std::span<const double> x) : x_(x), n_(static_cast<double>(x.size())) {
    mean_ = std::accumulate(x.begin(), x.end(), 0.0) / n_;
    double m2 = 0.0, m3 = 0.0, m4 = 0.0, maxabs = 0.0;
    for (double v : x) {
      const double d = v - mean_;
      const double d2 = d * d;
      m2 += d2;
      m3 += d2 * d;
      m4 += d2 * d2;
      maxabs = std::max(maxabs, std::abs(v));
    }
    m2_ = m2 / n_;
    m3_ = m3 / n_;
    m4_ = m4 / n_;
    const double tol = 1e-12 * std::max(maxabs, 1e-300);
    constant_ = m2_ <= tol * tol;
  }

  std::span<const double> x() const { return x_; }
  double n() const { return n_; }
  double mean() const { return mean_; }
  double m2() const { return m2_; }
  double m3() const { return m3_; }
  double m4() const { return m4_; }
  bool constant() const { return constant_; }

  const std::vector<double>& sorted() {
    if (sorted_.empty()) {
      sorted_.assign(x_.begin(), x_.end());
      std::sort(sorted_.begin(), sorted_.end());
    }
    return sorted_;
  }

  /// Linear interpolation between order statistics (numpy "linear").
  double quantile(double q) {
    const auto& s = sorted();
    const double pos = q * (n_ - 1.0);
    const auto lo = static_cast<std::size_t>(std::floor(pos));
    const std::size_t hi = std::min(lo + 1, s.size() - 1);
    return s[lo] + (pos - static_cast<double>(lo)) * (s[hi] - s[lo]);
  }

  /// One-sided periodogram without the DC term; index k <-> frequency k/n Hz.
  const std::vector<double>& spectrum() {
    if (!spectrum_) {
      std::vector<double> centered(x_.begin(), x_.end());
      for (double& v : centered) v -= mean_;
      spectrum_ = periodogram_plans().power(centered);
    }
    return *spectrum_;
  }

 private:
  std::span<const double> x_;
  double n_;
  double mean_ = 0.0, m2_ = 0.0, m3_ = 0.0, m4_ = 0.0;
  bool constant_ = false;
  std::vector<double> sorted_;
  std::optional<std::vector<double>> spectrum_;
};

struct Value {
  double v = 0.0;
  bool undefined = false;
};

Value undefined() { return {0.0, true}; }

Value spectral(WindowContext& ctx, FeatureKind kind, double param) {
  const auto& p = ctx.spectrum();
  const double n = ctx.n();
  const std::size_t kmax = p.size() - 1;
  if (kmax < 1) return undefined();
  double total = 0.0, first_moment = 0.0;
  for (std::size_t k = 1; k <= kmax; ++k) {
    total += p[k];
    first_moment += (static_cast<double>(k) / n) * p[k];
  }
  if (!(total > 0.0) || ctx.constant()) return undefined();
  const double centroid = first_moment / total;
  switch (kind) {
    case FeatureKind::SpectralCentroid: return {centroid};
    case FeatureKind::SpectralVariance: {
      double var = 0.0;
      for (std::size_t k = 1; k <= kmax; ++k) {
        const double d = static_cast<double>(k) / n - centroid;
        var += d * d * p[k];
      }
      return {var / total};
    }
    default: {
      const double f_lo = 1.0 / n;
      const double f_hi = static_cast<double>(kmax) / n;
      const int band = static_cast<int>(param);
      const double e0 = f_lo * std::pow(f_hi / f_lo, band / 3.0);
      const double e1 = f_lo * std::pow(f_hi / f_lo, (band + 1) / 3.0);
      double in_band = 0.0;
      for (std::size_t k = 1; k <= kmax; ++k) {
        const double f = static_cast<double>(k) / n;
        if (f >= e0 && (f < e1 || (band == 2 && k == kmax))) in_band += p[k];
      }
      return {in_band / total};
    }
  }
}

Value evaluate(WindowContext& ctx, const FeatureDef& def) {
  using K = FeatureKind;
  const auto x = ctx.x();
  const std::size_t len = x.size();
  const double n = ctx.n();
  const double mean = ctx.mean();
  switch (def.kind) {
    case K::Mean: return {mean};
    case K::Variance: return {ctx.m2()};
    case K::StdDev: return {std::sqrt(ctx.m2())};
    case K::Skewness:
      if (ctx.constant()) return undefined();
      return {ctx.m3() / std::pow(ctx.m2(), 1.5)};
    case K::Kurtosis:
      if (ctx.constant()) return undefined();
      return {ctx.m4() / (ctx.m2() * ctx.m2()) - 3.0};
    case K::Minimum: return {ctx.sorted().front()};
    case K::Maximum: return {ctx.sorted().back()};
    case K::Median: return {ctx.quantile(0.5)};
    case K::Quantile: return {ctx.quantile(def.param)};
    case K::Range: return {ctx.sorted().back() - ctx.sorted().front()};
    case K::RootMeanSquare:
    case K::AbsEnergy: {
      double e = 0.0;
      for (double v : x) e += v * v;
      return {def.kind == K::AbsEnergy ? e : std::sqrt(e / n)};
    }
    case K::MeanAbsChange:
    case K::MeanChange:
    case K::AbsoluteSumOfChanges: {
      if (len < 2) return undefined();
      double abs_sum = 0.0;
      for (std::size_t i = 1; i < len; ++i) abs_sum += std::abs(x[i] - x[i - 1]);
      if (def.kind == K::AbsoluteSumOfChanges) return {abs_sum};
      if (def.kind == K::MeanAbsChange) return {abs_sum / static_cast<double>(len - 1)};
      return {(x[len - 1] - x[0]) / static_cast<double>(len - 1)};
    }
    case K::MeanSecondDerivativeCentral: {
      if (len < 3) return undefined();
      return {(x[len - 1] - x[len - 2] - x[1] + x[0]) / (2.0 * static_cast<double>(len - 2))};
    }
    case K::ZeroCrossings: {
      double crossings = 0.0;
      for (std::size_t i = 1; i < len; ++i) {
        if ((x[i - 1] - mean >= 0.0) != (x[i] - mean >= 0.0)) crossings += 1.0;
      }
      if (ctx.constant()) crossings = 0.0;
      return {crossings};
    }
    case K::CountAboveMean:
    case K::CountBelowMean: {
      double c = 0.0;
      for (double v : x) c += def.kind == K::CountAboveMean ? (v > mean) : (v < mean);
      return {c};
    }
    case K::LongestStrikeAboveMean:
    case K::LongestStrikeBelowMean: {
      std::size_t best = 0, run = 0;
      for (double v : x) {
        const bool hit = def.kind == K::LongestStrikeAboveMean ? v > mean : v < mean;
        run = hit ? run + 1 : 0;
        best = std::max(best, run);
      }
      return {static_cast<double>(best)};
    }
    case K::NumberOfPeaks: {
      const auto support = static_cast<std::size_t>(def.param);
      double peaks = 0.0;
      for (std::size_t i = support; i + support < len; ++i) {
        bool peak = true;
        for (std::size_t j = 1; j <= support && peak; ++j) peak = x[i] > x[i - j] && x[i] > x[i + j];
        peaks += peak ? 1.0 : 0.0;
      }
      return {peaks};
    }
    case K::Autocorrelation: {
      const auto lag = static_cast<std::size_t>(def.param);
      if (ctx.constant() || lag >= len) return undefined();
      double acc = 0.0;
      for (std::size_t t = 0; t + lag < len; ++t) acc += (x[t] - mean) * (x[t + lag] - mean);
      return {acc / (static_cast<double>(len - lag) * ctx.m2())};
    }
    case K::PartialSumHalfRatio: {
      const std::size_t half = len / 2;
      double first = 0.0, second = 0.0;
      for (std::size_t i = 0; i < len; ++i) (i < half ? first : second) += std::abs(x[i]);
      if (!(second > 0.0)) return undefined();
      return {first / second};
    }
    case K::LinearTrendSlope:
    case K::LinearTrendIntercept:
    case K::LinearTrendR2: {
      if (len < 2) return undefined();
      const double tbar = (n - 1.0) / 2.0;
      double stt = 0.0, sty = 0.0;
      for (std::size_t i = 0; i < len; ++i) {
        const double dt = static_cast<double>(i) - tbar;
        stt += dt * dt;
        sty += dt * (x[i] - mean);
      }
      const double slope = sty / stt;
      if (def.kind == K::LinearTrendSlope) return {slope};
      if (def.kind == K::LinearTrendIntercept) return {mean - slope * tbar};
      if (ctx.constant()) return undefined();
      const double syy = ctx.m2() * n;
      return {std::clamp(sty * sty / (stt * syy), 0.0, 1.0)};
    }
    case K::BinnedEntropy: {
      const auto bins = static_cast<std::size_t>(def.param);
      const double lo = ctx.sorted().front();
      const double width = (ctx.sorted().back() - lo) / static_cast<double>(bins);
      std::vector<double> counts(bins, 0.0);
      for (double v : x) {
        std::size_t b = width > 0.0 ? static_cast<std::size_t>((v - lo) / width) : 0;
        counts[std::min(b, bins - 1)] += 1.0;
      }
      double h = 0.0;
      for (double c : counts) {
        if (c > 0.0) h -= (c / n) * std::log(c / n);
      }
      return {h};
    }
    case K::CidCe:
    case K::CidCeNormalized: {
      const bool normalize = def.kind == K::CidCeNormalized;
      if (normalize && ctx.constant()) return undefined();
      const double scale = normalize ? 1.0 / std::sqrt(ctx.m2()) : 1.0;
      double acc = 0.0;
      for (std::size_t i = 1; i < len; ++i) {
        const double d = (x[i] - x[i - 1]) * scale;
        acc += d * d;
      }
      return {std::sqrt(acc)};
    }
    case K::SpectralCentroid:
    case K::SpectralVariance:
    case K::BandPowerFraction: return spectral(ctx, def.kind, def.param);
    case K::FirstValue: return {x.front()};
    case K::LastValue: return {x.back()};
    case K::RatioBeyondSigma: {
      const double cut = def.param * std::sqrt(ctx.m2());
      double c = 0.0;
      for (double v : x) c += std::abs(v - mean) > cut ? 1.0 : 0.0;
      if (ctx.constant()) c = 0.0;
      return {c / n};
    }
    case K::IndexOfMax:
    case K::IndexOfMin: {
      const auto it = def.kind == K::IndexOfMax ? std::max_element(x.begin(), x.end())
                                                : std::min_element(x.begin(), x.end());
      return {static_cast<double>(it - x.begin()) / n};
    }
  }
  return undefined();
}

}  // namespace

const FeatureCatalog& catalog_v1() {
  static const FeatureCatalog c = make_v1();
  return c;
}

const FeatureCatalog& catalog(std::string_view version) {
  if (version == "v1") return catalog_v1();
  fail(ErrorCode::InvalidArgument, "unknown feature catalog version '" + std::string(version) + "'");
}

FeatureRow compute_features(std::span<const double> window, const FeatureCatalog& catalog) {
  if (window.empty()) fail(ErrorCode::InvalidArgument, "empty window");
  WindowContext ctx(window);
  FeatureRow row;
  row.values.reserve(catalog.features.size());
  row.imputed.reserve(catalog.features.size());
  for (const auto& def : catalog.features) {
    Value v = evaluate(ctx, def);
    if (!std::isfinite(v.v)) v = undefined();
    row.values.push_back(v.undefined ? 0.0 : v.v);
    row.imputed.push_back(v.undefined ? 1 : 0);
  }
  return row;
}

FeatureMatrix FeatureMatrix::select_rows(std::span<const std::size_t> idx) const {
  FeatureMatrix out;
  out.task = task;
  out.catalog_version = catalog_version;
  out.names = names;
  out.X.resize(static_cast<Eigen::Index>(idx.size()), X.cols());
  out.y.reserve(idx.size());
  for (std::size_t r = 0; r < idx.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(idx[r]));
    out.y.push_back(y[idx[r]]);
    if (!provenance.empty()) out.provenance.push_back(provenance[idx[r]]);
  }
  return out;
}

FeatureMatrix FeatureMatrix::select_cols(std::span<const std::size_t> idx) const {
  FeatureMatrix out;
  out.task = task;
  out.catalog_version = catalog_version;
  out.y = y;
  out.provenance = provenance;
  out.X.resize(X.rows(), static_cast<Eigen::Index>(idx.size()));
  for (std::size_t c = 0; c < idx.size(); ++c) {
    out.X.col(static_cast<Eigen::Index>(c)) = X.col(static_cast<Eigen::Index>(idx[c]));
    out.names.push_back(names[idx[c]]);
  }
  return out;
}

BuildResult build_matrix(const std::vector<labeling::LabeledWindow>& windows, const FeatureCatalog& catalog) {
  BuildResult out;
  auto& m = out.matrix;
  m.catalog_version = catalog.version;
  m.names = catalog.names();
  m.X.resize(static_cast<Eigen::Index>(windows.size()), static_cast<Eigen::Index>(catalog.features.size()));
  if (!windows.empty()) m.task = windows.front().task;
  for (std::size_t r = 0; r < windows.size(); ++r) {
    const auto& w = windows[r];
    if (w.task != m.task) fail(ErrorCode::InvalidArgument, "windows from different tasks in one matrix");
    const FeatureRow row = compute_features(w.values, catalog);
    for (std::size_t c = 0; c < row.values.size(); ++c) {
      m.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row.values[c];
      out.imputed_cells += row.imputed[c];
    }
    m.y.push_back(w.label);
    m.provenance.push_back({w.plant_id, w.channel, w.start_ms});
  }
  return out;
}

MinMaxParams fit_minmax(const Matrix& train) {
  if (train.rows() == 0) fail(ErrorCode::InvalidArgument, "min-max fit needs at least one row");
  return {train.colwise().minCoeff().transpose(), train.colwise().maxCoeff().transpose()};
}

Matrix apply_minmax(const MinMaxParams& params, const Matrix& rows) {
  if (rows.cols() != params.min.size()) fail(ErrorCode::DimensionMismatch, "min-max column count");
  Matrix out(rows.rows(), rows.cols());
  for (Eigen::Index c = 0; c < rows.cols(); ++c) {
    const double span = params.max(c) - params.min(c);
    if (span > 0.0) {
      out.col(c) = (rows.col(c).array() - params.min(c)) / span;
    } else {
      out.col(c).setZero();
    }
  }
  return out;
}

void write_matrix_csv(const std::filesystem::path& path, const FeatureMatrix& m) {
  std::string out = "plant_id,channel,start_ms,label";
  for (const auto& n : m.names) out += "," + n;
  out += '\n';
  for (std::size_t r = 0; r < m.rows(); ++r) {
    const Provenance p = r < m.provenance.size() ? m.provenance[r] : Provenance{};
    out += p.plant_id + "," + std::string(to_string(p.channel)) + "," + std::to_string(p.start_ms) + ",";
    out += class_name(m.task, m.y[r]);
    for (std::size_t c = 0; c < m.cols(); ++c) {
      out += ',';
      out += csv::format_double(m.X(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)));
    }
    out += '\n';
  }
  csv::write_file(path, out);
  const nlohmann::json meta = {{"catalog_version", m.catalog_version},
                               {"task", to_string(m.task)},
                               {"feature_count", m.cols()},
                               {"rows", m.rows()}};
  csv::write_file(path.string() + ".json", meta.dump(2) + "\n");
}

FeatureMatrix read_matrix_csv(const std::filesystem::path& path) {
  const auto meta = nlohmann::json::parse(csv::read_file(path.string() + ".json"));
  FeatureMatrix m;
  m.task = parse_task(meta.at("task").get<std::string>());
  m.catalog_version = meta.at("catalog_version").get<std::string>();

  csv::LineReader reader(path);
  std::string line;
  if (!reader.next(line)) fail(ErrorCode::EmptyFile, path.string());
  const auto header = csv::split(line);
  if (header.size() < 5) fail(ErrorCode::MalformedRow, "feature header too short in " + path.string());
  for (std::size_t i = 4; i < header.size(); ++i) m.names.emplace_back(header[i]);

  std::vector<double> cells;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const std::string where = path.string() + ":" + std::to_string(reader.line_number());
    if (f.size() != header.size()) fail(ErrorCode::MalformedRow, "wrong field count at " + where);
    const auto ts = csv::parse_int(f[2]);
    if (!ts) fail(ErrorCode::MalformedRow, "bad start_ms at " + where);
    m.provenance.push_back({std::string(f[0]), parse_channel(f[1]), *ts});
    m.y.push_back(parse_class_name(m.task, f[3]));
    for (std::size_t i = 4; i < f.size(); ++i) {
      const auto v = csv::parse_double(f[i]);
      if (!v) fail(ErrorCode::MalformedRow, "bad feature value at " + where);
      cells.push_back(*v);
    }
  }
  const auto rows = static_cast<Eigen::Index>(m.y.size());
  const auto cols = static_cast<Eigen::Index>(m.names.size());
  m.X = Eigen::Map<Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(cells.data(), rows, cols);
  return m;
}

}  // namespace phyto::features
