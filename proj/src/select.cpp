#include "phyto/select.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>

#include "phyto/csv.hpp"
#include "phyto/error.hpp"

namespace phyto::select {

std::vector<std::size_t> equal_frequency_bins(std::span<const double> column, std::size_t bins) {
  if (bins == 0) fail(ErrorCode::InvalidArgument, "bin count must be positive");
  const std::size_t n = column.size();
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) { return column[a] < column[b]; });
  std::vector<std::size_t> out(n);
  std::size_t first = 0;
  for (std::size_t r = 0; r < n; ++r) {
    if (r > 0 && column[order[r]] != column[order[r - 1]]) first = r;
    out[order[r]] = first * bins / n;
  }
  return out;
}

double plugin_mi(std::span<const std::size_t> a, std::span<const Label> y) {
  if (a.size() != y.size()) fail(ErrorCode::LengthMismatch, "codes and labels lengths differ");
  if (a.empty()) return 0.0;
  const std::size_t width = *std::max_element(a.begin(), a.end()) + 1;
  std::vector<std::array<double, 2>> joint(width, {0.0, 0.0});
  std::array<double, 2> py{0.0, 0.0};
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (y[i] != 0 && y[i] != 1) fail(ErrorCode::InvalidArgument, "labels must be 0 or 1");
    joint[a[i]][static_cast<std::size_t>(y[i])] += 1.0;
    py[static_cast<std::size_t>(y[i])] += 1.0;
  }
  const double n = static_cast<double>(a.size());
  double mi = 0.0;
  for (const auto& row : joint) {
    const double pb = (row[0] + row[1]) / n;
    for (std::size_t c = 0; c < 2; ++c) {
      if (row[c] == 0.0) continue;
      const double pbc = row[c] / n;
      mi += pbc * std::log(pbc / (pb * (py[c] / n)));
    }
  }
  return std::max(0.0, mi);
}

std::vector<FeatureScore> mutual_information(const Matrix& X, const std::vector<Label>& y,
                                             const std::vector<std::string>& names, std::size_t bins) {
  if (static_cast<std::size_t>(X.rows()) != y.size()) fail(ErrorCode::LengthMismatch, "X rows and labels differ");
  if (!names.empty() && names.size() != static_cast<std::size_t>(X.cols())) {
    fail(ErrorCode::DimensionMismatch, "feature name count does not match columns");
  }
  if (!X.allFinite()) fail(ErrorCode::NonFiniteInput, "feature matrix has non-finite values");
  std::vector<FeatureScore> out;
  for (Eigen::Index j = 0; j < X.cols(); ++j) {
    const Vector col = X.col(j);
    const auto codes = equal_frequency_bins(std::span<const double>(col.data(), static_cast<std::size_t>(col.size())), bins);
    FeatureScore s;
    s.column = static_cast<std::size_t>(j);
    s.name = names.empty() ? "f" + std::to_string(j) : names[s.column];
    s.mi = plugin_mi(codes, y);
    out.push_back(std::move(s));
  }
  std::stable_sort(out.begin(), out.end(), [](const FeatureScore& a, const FeatureScore& b) { return a.mi > b.mi; });
  for (std::size_t r = 0; r < out.size(); ++r) out[r].rank = r + 1;
  return out;
}

std::vector<std::size_t> top_k_columns(const std::vector<FeatureScore>& ranking, std::size_t k) {
  if (k > ranking.size()) fail(ErrorCode::InvalidArgument, "k exceeds the number of ranked features");
  std::vector<std::size_t> cols;
  for (std::size_t i = 0; i < k; ++i) cols.push_back(ranking[i].column);
  std::sort(cols.begin(), cols.end());
  return cols;
}

SelectionSweep sweep_top_k(const features::FeatureMatrix& data, const learn::PipelineSpec& spec,
                           const SweepOptions& opts) {
  if (opts.max_k == 0 || opts.max_k > data.cols()) {
    fail(ErrorCode::InvalidArgument, "sweep K must lie in [1, " + std::to_string(data.cols()) + "]");
  }
  SelectionSweep sweep;
  sweep.mode = opts.mode;
  const auto pool = eval::test_holdout(data.y, opts.protocol.plan).train;
  const auto pool_data = data.select_rows(pool);
  sweep.ranking = mutual_information(pool_data.X, pool_data.y, data.names, opts.bins);

  std::map<std::size_t, std::vector<FeatureScore>> split_rankings;
  for (std::size_t k = 1; k <= opts.max_k; ++k) {
    eval::ProtocolOptions protocol = opts.protocol;
    if (opts.mode == MiMode::Global) {
      const auto cols = top_k_columns(sweep.ranking, k);
      protocol.select_columns = [cols](std::size_t, const Matrix&, const std::vector<Label>&) { return cols; };
    } else {
      protocol.select_columns = [&, k](std::size_t split, const Matrix& X, const std::vector<Label>& y) {
        auto it = split_rankings.find(split);
        if (it == split_rankings.end()) it = split_rankings.emplace(split, mutual_information(X, y, {}, opts.bins)).first;
        return top_k_columns(it->second, k);
      };
    }
    const auto report = eval::evaluate_protocol(data, spec, protocol);
    SweepEntry e;
    e.k = k;
    for (std::size_t i = 0; i < k; ++i) e.selected.push_back(sweep.ranking[i].name);
    e.feature_added = sweep.ranking[k - 1].name;
    e.mean_macro_f1 = report.test_macro_f1_mean;
    e.std_macro_f1 = report.test_macro_f1_std;
    e.val_mean_macro_f1 = report.val_macro_f1_mean;
    e.val_std_macro_f1 = report.val_macro_f1_std;
    sweep.entries.push_back(std::move(e));
  }
  return sweep;
}

void write_sweep_csv(const std::filesystem::path& path, const SelectionSweep& sweep) {
  std::string out = "k,mean_macro_f1,std_macro_f1,features_added\n";
  for (const auto& e : sweep.entries) {
    out += std::to_string(e.k) + ',' + csv::format_double(e.mean_macro_f1) + ',' + csv::format_double(e.std_macro_f1) +
           ',' + e.feature_added + '\n';
  }
  csv::write_file(path, out);
}

void write_ranking_csv(const std::filesystem::path& path, const std::vector<FeatureScore>& ranking) {
  std::string out = "rank,feature,mi_nats\n";
  for (const auto& s : ranking) out += std::to_string(s.rank) + ',' + s.name + ',' + csv::format_double(s.mi) + '\n';
  csv::write_file(path, out);
}

}  // namespace phyto::select
