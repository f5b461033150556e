#include "optneq/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace optneq {

Vector weighted_average(const Matrix& x, const std::optional<Vector>& u) {
  if (!u) return x.colwise().mean().transpose();
  if (u->size() != x.rows()) throw ConfigError("weight vector length must equal agent count");
  return (x.transpose() * *u) / static_cast<double>(x.rows());
}

MetricRow compute_metrics(const SolverState& s, const MetricContext& ctx) {
  if (!ctx.inst) throw ConfigError("metric context has no problem instance");
  const auto& inst = *ctx.inst;
  const Eigen::Index m = s.x.rows();

  MetricRow row;
  row.k = s.k;
  const Vector xbar = weighted_average(s.x, ctx.u);
  row.lower = inst.total_map(xbar).norm();
  row.consensus_x = (s.x.rowwise() - xbar.transpose()).norm();

  const Vector ybar = s.y.colwise().mean().transpose();
  if (ctx.v) {
    if (ctx.v->size() != m) throw ConfigError("weight vector length must equal agent count");
    row.consensus_y = (s.y - *ctx.v * ybar.transpose()).norm();
  } else {
    row.consensus_y = (s.y.rowwise() - ybar.transpose()).norm();
  }

  if (ctx.oracle) row.dist_opt = (xbar - ctx.oracle->x_star).norm();
  if (ctx.tikhonov) {
    TikhonovOptions opts = ctx.tikhonov_options;
    if (!opts.start && ctx.oracle) opts.start = ctx.oracle->x_star;
    const auto sol = tikhonov_solve(inst, schedule_at(ctx.schedule, s.k).lambda, opts);
    row.dist_tikhonov = (xbar - sol.x).norm();
  }
  return row;
}

double field_value(const MetricRow& row, std::string_view field) {
  auto need = [&](const std::optional<double>& v) {
    if (!v) throw ConfigError("field '" + std::string(field) + "' is empty at k = " + std::to_string(row.k));
    return *v;
  };
  if (field == "lower") return row.lower;
  if (field == "upper") return need(row.upper);
  if (field == "consensus_x") return row.consensus_x;
  if (field == "consensus_y") return row.consensus_y;
  if (field == "dist_tikhonov") return need(row.dist_tikhonov);
  if (field == "dist_opt") return need(row.dist_opt);
  throw ConfigError("unknown metric field '" + std::string(field) + "'");
}

RateFit fit_decay(const std::vector<long>& ks, const std::vector<double>& values, long k_lo, long k_hi,
                  double exponent, double offset) {
  if (ks.size() != values.size()) throw ConfigError("series lengths differ");
  RateFit fit{k_lo, k_hi, 0, 0.0, 0.0};
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t j = 0; j < ks.size(); ++j) {
    if (ks[j] < k_lo || ks[j] > k_hi) continue;
    const double e = values[j];
    if (!(e > 0.0) || !std::isfinite(e))
      throw NumericalError("nonpositive value in fit window at k = " + std::to_string(ks[j]), e);
    const double t = static_cast<double>(ks[j]) + offset;
    const double lx = std::log(t), ly = std::log(e);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
    fit.bound_const = std::max(fit.bound_const, e * std::pow(t, exponent));
    ++fit.points;
  }
  if (fit.points == 0) throw ConfigError("empty fit window");
  const double n = static_cast<double>(fit.points);
  const double denom = n * sxx - sx * sx;
  fit.slope = fit.points > 1 && denom > 0.0 ? (n * sxy - sx * sy) / denom : 0.0;
  return fit;
}

RateFit fit_decay(const std::vector<MetricRow>& rows, std::string_view field, long k_lo, long k_hi,
                  double exponent, double offset) {
  std::vector<long> ks;
  std::vector<double> vals;
  for (const auto& r : rows) {
    if (r.k < k_lo || r.k > k_hi) continue;
    ks.push_back(r.k);
    vals.push_back(field_value(r, field));
  }
  return fit_decay(ks, vals, k_lo, k_hi, exponent, offset);
}

BoundGrowth bound_growth(const std::vector<long>& ks, const std::vector<double>& values, long k_lo,
                         long k_hi, double exponent, double offset) {
  if (k_hi <= k_lo) throw ConfigError("window must have k_lo < k_hi");
  const long mid = k_lo + (k_hi - k_lo) / 2;
  BoundGrowth g;
  g.first = fit_decay(ks, values, k_lo, mid, exponent, offset);
  g.second = fit_decay(ks, values, mid + 1, k_hi, exponent, offset);
  g.ratio = g.second.bound_const / g.first.bound_const;
  return g;
}

PathAggregate aggregate_paths(const std::vector<std::vector<MetricRow>>& runs) {
  if (runs.empty()) throw ConfigError("no sample paths to aggregate");
  const std::size_t n = runs.front().size();
  for (const auto& r : runs) {
    if (r.size() != n) throw ConfigError("sample paths logged different numbers of rows");
    for (std::size_t j = 0; j < n; ++j) {
      if (r[j].k != runs.front()[j].k) throw ConfigError("sample paths logged at different k");
    }
  }
  const double count = static_cast<double>(runs.size());
  PathAggregate out;
  for (std::size_t j = 0; j < n; ++j) {
    MetricRow mean, lo, hi;
    mean.k = lo.k = hi.k = runs.front()[j].k;
    auto plain = [&](double MetricRow::*f) {
      double s = 0, a = runs.front()[j].*f, b = a;
      for (const auto& r : runs) {
        s += r[j].*f;
        a = std::min(a, r[j].*f);
        b = std::max(b, r[j].*f);
      }
      mean.*f = s / count;
      lo.*f = a;
      hi.*f = b;
    };
    auto optional = [&](std::optional<double> MetricRow::*f) {
      if (!std::all_of(runs.begin(), runs.end(), [&](const auto& r) { return (r[j].*f).has_value(); }))
        return;
      double s = 0, a = *(runs.front()[j].*f), b = a;
      for (const auto& r : runs) {
        const double v = *(r[j].*f);
        s += v;
        a = std::min(a, v);
        b = std::max(b, v);
      }
      mean.*f = s / count;
      lo.*f = a;
      hi.*f = b;
    };
    plain(&MetricRow::lower);
    plain(&MetricRow::consensus_x);
    plain(&MetricRow::consensus_y);
    optional(&MetricRow::upper);
    optional(&MetricRow::dist_tikhonov);
    optional(&MetricRow::dist_opt);
    out.mean.push_back(mean);
    out.min.push_back(lo);
    out.max.push_back(hi);
  }
  return out;
}

namespace {

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fmt(const std::optional<double>& v) { return v ? fmt(*v) : std::string(); }

std::optional<double> parse_optional(const std::string& cell) {
  if (cell.empty()) return std::nullopt;
  return std::stod(cell);
}

}  // namespace

std::string metrics_csv(const std::vector<MetricRow>& rows) {
  std::string out(kMetricsHeader);
  out += '\n';
  for (const auto& r : rows) {
    out += std::to_string(r.k) + ',' + fmt(r.lower) + ',' + fmt(r.upper) + ',' + fmt(r.consensus_x) + ',' +
           fmt(r.consensus_y) + ',' + fmt(r.dist_tikhonov) + ',' + fmt(r.dist_opt) + '\n';
  }
  return out;
}

void write_metrics_csv(const std::filesystem::path& path, const std::vector<MetricRow>& rows) {
  std::ofstream f(path, std::ios::binary | std::ios::trunc);
  if (!f) throw IoError("cannot open " + path.string() + " for writing");
  f << metrics_csv(rows);
  if (!f) throw IoError("write failed for " + path.string());
}

std::vector<MetricRow> read_metrics_csv(const std::filesystem::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open " + path.string());
  std::string line;
  if (!std::getline(f, line) || line != kMetricsHeader)
    throw IoError(path.string() + ": missing or unexpected header");
  std::vector<MetricRow> rows;
  long lineno = 1;
  while (std::getline(f, line)) {
    ++lineno;
    if (line.empty()) continue;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (!line.empty() && line.back() == ',') cells.emplace_back();
    if (cells.size() != 7) throw IoError(path.string() + ":" + std::to_string(lineno) + ": expected 7 fields");
    try {
      MetricRow r;
      r.k = std::stol(cells[0]);
      r.lower = std::stod(cells[1]);
      r.upper = parse_optional(cells[2]);
      r.consensus_x = std::stod(cells[3]);
      r.consensus_y = std::stod(cells[4]);
      r.dist_tikhonov = parse_optional(cells[5]);
      r.dist_opt = parse_optional(cells[6]);
      rows.push_back(r);
    } catch (const std::logic_error&) {
      throw IoError(path.string() + ":" + std::to_string(lineno) + ": malformed number");
    }
  }
  return rows;
}

}  // namespace optneq
