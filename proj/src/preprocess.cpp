#include "phyto/preprocess.hpp"

#include <cmath>
#include <numeric>

#include <json.hpp>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"

namespace phyto::preprocess {

SparseSeries downsample_mean(const RawTrace& trace, double target_rate_hz) {
  if (!(target_rate_hz > 0.0)) fail(ErrorCode::InvalidArgument, "target rate must be > 0");
  if (trace.samples.empty()) fail(ErrorCode::EmptyFile, "trace has no samples");
  const double bin_ms = 1000.0 / target_rate_hz;
  auto bin_of = [&](TimestampMs ts) { return static_cast<std::int64_t>(std::floor(static_cast<double>(ts) / bin_ms)); };

  const std::int64_t first = bin_of(trace.samples.front().timestamp_ms);
  const std::int64_t last = bin_of(trace.samples.back().timestamp_ms);
  const auto n = static_cast<std::size_t>(last - first + 1);
  std::vector<double> sums(n, 0.0);
  std::vector<std::size_t> counts(n, 0);
  for (const auto& s : trace.samples) {
    const auto b = static_cast<std::size_t>(bin_of(s.timestamp_ms) - first);
    sums[b] += s.potential_mv;
    ++counts[b];
  }

  SparseSeries out;
  out.plant_id = trace.plant_id;
  out.channel = trace.channel;
  out.rate_hz = target_rate_hz;
  out.unit = Unit::Millivolt;
  out.start_ms = static_cast<TimestampMs>(std::llround(static_cast<double>(first) * bin_ms));
  out.values.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    if (counts[i] > 0) out.values[i] = sums[i] / static_cast<double>(counts[i]);
  }
  return out;
}

UniformSeries interpolate_time(const SparseSeries& series) {
  std::vector<std::size_t> present;
  for (std::size_t i = 0; i < series.values.size(); ++i) {
    if (series.values[i]) present.push_back(i);
  }
  if (present.size() < 2) fail(ErrorCode::TooSparse, "need at least two present values to interpolate");

  UniformSeries out;
  out.plant_id = series.plant_id;
  out.channel = series.channel;
  out.start_ms = series.start_ms;
  out.rate_hz = series.rate_hz;
  out.unit = series.unit;
  out.values.resize(series.values.size());

  const std::size_t head = present.front();
  const std::size_t tail = present.back();
  for (std::size_t i = 0; i < head; ++i) out.values[i] = *series.values[head];
  for (std::size_t i = tail; i < series.values.size(); ++i) out.values[i] = *series.values[tail];
  for (std::size_t p = 0; p + 1 < present.size(); ++p) {
    const std::size_t a = present[p];
    const std::size_t b = present[p + 1];
    const double va = *series.values[a];
    const double vb = *series.values[b];
    const auto ta = static_cast<double>(series.timestamp_at(a));
    const auto tb = static_cast<double>(series.timestamp_at(b));
    out.values[a] = va;
    for (std::size_t i = a + 1; i < b; ++i) {
      const double w = (static_cast<double>(series.timestamp_at(i)) - ta) / (tb - ta);
      out.values[i] = va + w * (vb - va);
    }
  }
  return out;
}

namespace {

ZScoreParams fit_zscore(const std::vector<const std::vector<double>*>& parts) {
  std::size_t n = 0;
  double sum = 0.0;
  for (const auto* p : parts) {
    n += p->size();
    sum = std::accumulate(p->begin(), p->end(), sum);
  }
  if (n < 2) fail(ErrorCode::DegenerateSeries, "z-score needs at least two samples");
  const double mu = sum / static_cast<double>(n);
  double ss = 0.0;
  for (const auto* p : parts) {
    for (double v : *p) ss += (v - mu) * (v - mu);
  }
  const double sigma = std::sqrt(ss / static_cast<double>(n));
  if (!(sigma > 0.0)) fail(ErrorCode::DegenerateSeries, "constant series (sigma = 0)");
  return {mu, sigma};
}

UniformSeries apply_zscore(const UniformSeries& s, const ZScoreParams& p) {
  UniformSeries out = s;
  for (double& v : out.values) v = (v - p.mu) / p.sigma;
  out.unit = Unit::ZScore;
  return out;
}

}  // namespace

ZScoreResult zscore(const UniformSeries& series) {
  const ZScoreParams params = fit_zscore({&series.values});
  return {apply_zscore(series, params), params};
}

UniformSeries denormalize(const UniformSeries& series, const ZScoreParams& params) {
  UniformSeries out = series;
  for (double& v : out.values) v = v * params.sigma + params.mu;
  out.unit = Unit::Millivolt;
  return out;
}

PreprocessResult run(const SparseSeries& downsampled, const PreprocessOptions& opts) {
  ingest::CoverageOptions cov = opts.coverage;
  cov.expected_rate_hz = downsampled.rate_hz;
  auto filtered = ingest::coverage_filter(downsampled, cov);

  PreprocessResult out;
  out.coverage = std::move(filtered.report);
  for (const auto& seg : filtered.segments) out.segments.push_back(interpolate_time(seg));
  if (opts.zscore && !out.segments.empty()) {
    std::vector<const std::vector<double>*> parts;
    for (const auto& s : out.segments) parts.push_back(&s.values);
    const ZScoreParams params = fit_zscore(parts);
    for (auto& s : out.segments) s = apply_zscore(s, params);
    out.zscore_params = params;
  }
  return out;
}

PreprocessResult run(const RawTrace& trace, const PreprocessOptions& opts) {
  return run(downsample_mean(trace, opts.target_rate_hz), opts);
}

void write_series(const std::filesystem::path& csv_path, const std::vector<UniformSeries>& segments,
                  const std::optional<ZScoreParams>& params) {
  std::string out = "timestamp_ms,value\n";
  for (const auto& seg : segments) {
    for (std::size_t i = 0; i < seg.values.size(); ++i) {
      out += std::to_string(seg.timestamp_at(i));
      out += ',';
      out += csv::format_double(seg.values[i]);
      out += '\n';
    }
  }
  csv::write_file(csv_path, out);

  nlohmann::json meta;
  if (!segments.empty()) {
    meta["plant_id"] = segments.front().plant_id;
    meta["channel"] = to_string(segments.front().channel);
    meta["rate_hz"] = segments.front().rate_hz;
    meta["unit"] = to_string(segments.front().unit);
  }
  meta["segments"] = segments.size();
  if (params) meta["zscore"] = {{"mu", params->mu}, {"sigma", params->sigma}};
  csv::write_file(csv_path.string() + ".json", meta.dump(2) + "\n");
}

LoadedSeries read_series(const std::filesystem::path& csv_path) {
  const auto meta = nlohmann::json::parse(csv::read_file(csv_path.string() + ".json"));
  LoadedSeries out;
  if (meta.contains("zscore")) {
    out.zscore_params = ZScoreParams{meta["zscore"]["mu"].get<double>(), meta["zscore"]["sigma"].get<double>()};
  }
  if (!meta.contains("rate_hz")) return out;
  UniformSeries proto;
  proto.plant_id = meta["plant_id"].get<std::string>();
  proto.channel = parse_channel(meta["channel"].get<std::string>());
  proto.rate_hz = meta["rate_hz"].get<double>();
  proto.unit = parse_unit(meta["unit"].get<std::string>());
  const auto period = static_cast<TimestampMs>(std::llround(1000.0 / proto.rate_hz));

  csv::LineReader reader(csv_path);
  std::string line;
  reader.next(line);
  TimestampMs prev = 0;
  while (reader.next(line)) {
    if (line.empty()) continue;
    const auto f = csv::split(line);
    const auto ts = f.size() == 2 ? csv::parse_int(f[0]) : std::nullopt;
    const auto v = f.size() == 2 ? csv::parse_double(f[1]) : std::nullopt;
    if (!ts || !v) fail(ErrorCode::MalformedRow, csv_path.string() + ":" + std::to_string(reader.line_number()));
    if (out.segments.empty() || *ts - prev != period) {
      out.segments.push_back(proto);
      out.segments.back().start_ms = *ts;
    }
    out.segments.back().values.push_back(*v);
    prev = *ts;
  }
  return out;
}

}  // namespace phyto::preprocess
