#include "fec/model.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace fec {

double TargetModel::factor_potential(int, const Vec&) const {
  throw std::logic_error("target is not factorized");
}

Vec TargetModel::factor_gradient(int, const Vec&) const {
  throw std::logic_error("target is not factorized");
}

double TargetModel::factor_event_time(int, const Vec&, const Vec&, double) const {
  throw std::logic_error("target is not factorized");
}

DiagonalGaussian::DiagonalGaussian(Vec variances) : var_(std::move(variances)) {
  if (var_.size() == 0 || (var_.array() <= 0.0).any()) {
    throw std::invalid_argument("DiagonalGaussian: variances must be positive");
  }
  inv_var_ = var_.cwiseInverse();
}

double DiagonalGaussian::potential(const Vec& x) const {
  return 0.5 * x.cwiseProduct(inv_var_).dot(x);
}

Vec DiagonalGaussian::gradient(const Vec& x) const {
  return inv_var_.cwiseProduct(x);
}

std::optional<ObservableMoments> DiagonalGaussian::moments(Observable obs,
                                                           int coordinate) const {
  const int d = dim();
  switch (obs) {
    case Observable::Potential:
      return ObservableMoments{0.5 * d, 0.5 * d};
    case Observable::SquaredNorm:
      return ObservableMoments{var_.sum(), 2.0 * var_.squaredNorm()};
    case Observable::Coordinate:
      if (coordinate < 0 || coordinate >= d) {
        throw std::invalid_argument("moments: coordinate out of range");
      }
      return ObservableMoments{0.0, var_[coordinate]};
    default:
      return std::nullopt;
  }
}

QuadraticLineRate DiagonalGaussian::line_rate(const Vec& x, const Vec& y) const {
  QuadraticLineRate line;
  const Vec wy = inv_var_.cwiseProduct(y);
  line.u0 = 0.5 * wy.dot(y);
  line.t0 = wy.dot(x) / (2.0 * line.u0);
  return line;
}

DiagonalGaussian standard_gaussian(int dim) {
  if (dim < 1) throw std::invalid_argument("standard_gaussian: dim >= 1");
  return DiagonalGaussian(Vec::Ones(dim));
}

DiagonalGaussian build_anisotropic_gaussian(int dim) {
  if (dim < 2) throw std::invalid_argument("build_anisotropic_gaussian: dim >= 2");
  Vec var(dim);
  const double log_ratio = 6.0 * std::numbers::ln10;
  for (int i = 0; i < dim; ++i) {
    var[i] = std::exp(log_ratio * i / (dim - 1));
  }
  return DiagonalGaussian(std::move(var));
}

GaussianMixtureSpec build_gaussian_mixture(int dim, std::uint64_t seed) {
  if (dim < 1) throw std::invalid_argument("build_gaussian_mixture: dim >= 1");
  GaussianMixtureSpec spec;
  spec.dim = dim;
  spec.seed = seed;
  Rng rng(seed);
  spec.base_variances = Vec(dim);
  for (int i = 0; i < dim; ++i) spec.base_variances[i] = rng.uniform(0.5, 3.0);
  for (auto& perm : spec.perms) {
    perm.resize(dim);
    for (int i = 0; i < dim; ++i) perm[i] = i;
    for (int i = dim - 1; i > 0; --i) {
      const int j = static_cast<int>(rng.below(static_cast<std::uint64_t>(i) + 1));
      std::swap(perm[i], perm[j]);
    }
  }
  spec.nu1 = rng.uniform(1.0, 2.0);
  spec.nu2 = rng.uniform(1.0, 2.0);
  spec.means[0] = Vec::Zero(dim);
  for (int j = 1; j < 5; ++j) {
    spec.means[j] = Vec(dim);
    for (int i = 0; i < dim; ++i) {
      const double sd_here = std::sqrt(spec.base_variances[spec.perms[j][i]]);
      const double sd_prev = std::sqrt(spec.base_variances[spec.perms[j - 1][i]]);
      spec.means[j][i] = spec.means[j - 1][i] + spec.nu1 * sd_here + spec.nu2 * sd_prev;
    }
  }
  return spec;
}

GaussianMixture::GaussianMixture(GaussianMixtureSpec spec) : spec_(std::move(spec)) {
  const int d = spec_.dim;
  double sum_log_var = 0.0;
  for (int i = 0; i < d; ++i) sum_log_var += std::log(spec_.base_variances[i]);
  log_norm_ = 0.5 * d * std::log(2.0 * std::numbers::pi) + 0.5 * sum_log_var +
              std::log(5.0);
  for (int j = 0; j < 5; ++j) {
    inv_var_[j] = Vec(d);
    for (int i = 0; i < d; ++i) {
      inv_var_[j][i] = 1.0 / spec_.base_variances[spec_.perms[j][i]];
    }
  }
}

Vec GaussianMixture::log_component_densities(const Vec& x) const {
  // Up to the shared -log_norm_ offset; every component has the same
  // determinant because the variances are permuted, not changed.
  Vec out(5);
  for (int j = 0; j < 5; ++j) {
    const Vec diff = x - spec_.means[j];
    out[j] = -0.5 * diff.cwiseProduct(inv_var_[j]).dot(diff);
  }
  return out;
}

double GaussianMixture::potential(const Vec& x) const {
  const Vec lg = log_component_densities(x);
  const double m = lg.maxCoeff();
  double s = 0.0;
  for (int j = 0; j < 5; ++j) s += std::exp(lg[j] - m);
  return -(m + std::log(s)) + log_norm_;
}

Vec GaussianMixture::component_weights(const Vec& x) const {
  const Vec lg = log_component_densities(x);
  const double m = lg.maxCoeff();
  Vec w(5);
  double s = 0.0;
  for (int j = 0; j < 5; ++j) {
    w[j] = std::exp(lg[j] - m);
    s += w[j];
  }
  return w / s;
}

Vec GaussianMixture::gradient(const Vec& x) const {
  const Vec w = component_weights(x);
  Vec g = Vec::Zero(spec_.dim);
  for (int j = 0; j < 5; ++j) {
    g += w[j] * inv_var_[j].cwiseProduct(x - spec_.means[j]);
  }
  return g;
}

Vec GaussianMixture::sample_exact(Rng& rng) const {
  const int j = static_cast<int>(rng.below(5));
  Vec x(spec_.dim);
  for (int i = 0; i < spec_.dim; ++i) {
    const double sd = std::sqrt(spec_.base_variances[spec_.perms[j][i]]);
    x[i] = spec_.means[j][i] + sd * rng.normal();
  }
  return x;
}

EventDraw GaussianMixture::thinned_event_time(const Vec& x, const Vec& y,
                                              Rng& rng, double cap) const {
  // Envelope: sum over components of the linear rates a_j + b_j t with
  // b_j = <y, S_j^-1 y> > 0. Each dominates its weighted share of the true
  // rate, so accepting with ratio true/envelope is valid thinning.
  std::array<double, 5> a{}, b{};
  for (int j = 0; j < 5; ++j) {
    const Vec wy = inv_var_[j].cwiseProduct(y);
    a[j] = wy.dot(x - spec_.means[j]);
    b[j] = wy.dot(y);
  }
  double elapsed = 0.0;
  for (long iter = 0;; ++iter) {
    if (iter > 100000000L) {
      throw std::runtime_error("thinned_event_time: thinning loop stuck");
    }
    double step = kInf;
    for (int j = 0; j < 5; ++j) {
      step = std::min(step, linear_rate_event_time(a[j], b[j], rng.exponential()));
    }
    elapsed += step;
    if (elapsed > cap) {
      return EventDraw{kInf, -1, std::numeric_limits<double>::quiet_NaN()};
    }
    double envelope = 0.0;
    for (int j = 0; j < 5; ++j) {
      a[j] += b[j] * step;
      envelope += std::max(0.0, a[j]);
    }
    if (envelope <= 0.0) continue;
    const Vec xc = x + elapsed * y;
    const double true_rate = std::max(0.0, y.dot(gradient(xc)));
    if (rng.uniform() < true_rate / envelope) {
      return EventDraw{elapsed, -1, std::numeric_limits<double>::quiet_NaN()};
    }
  }
}

namespace {

double softplus(double z) {
  return z > 0.0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z));
}

double sigmoid(double z) {
  return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z))
                  : std::exp(z) / (1.0 + std::exp(z));
}

}  // namespace

LogisticPosterior::LogisticPosterior(LogisticDataset data, double prior_variance)
    : data_(std::move(data)), prior_variance_(prior_variance) {
  if (prior_variance_ <= 0.0) {
    throw std::invalid_argument("LogisticPosterior: prior variance must be positive");
  }
  if (data_.covariates.rows() == 0 || data_.covariates.cols() == 0) {
    throw std::invalid_argument("LogisticPosterior: empty dataset");
  }
  if (static_cast<std::size_t>(data_.covariates.rows()) != data_.labels.size()) {
    throw std::invalid_argument("LogisticPosterior: label/covariate row mismatch");
  }
  if (!data_.covariates.allFinite()) {
    throw std::invalid_argument("LogisticPosterior: non-finite covariates");
  }
  for (int l : data_.labels) {
    if (l != 0 && l != 1) {
      throw std::invalid_argument("LogisticPosterior: labels must be 0/1");
    }
  }
}

double LogisticPosterior::potential(const Vec& theta) const {
  const Vec z = data_.covariates * theta;
  double u = theta.squaredNorm() / (2.0 * prior_variance_);
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    u += softplus(z[i]) - data_.labels[static_cast<std::size_t>(i)] * z[i];
  }
  return u;
}

Vec LogisticPosterior::gradient(const Vec& theta) const {
  Vec r = data_.covariates * theta;
  for (Eigen::Index i = 0; i < r.size(); ++i) {
    r[i] = sigmoid(r[i]) - data_.labels[static_cast<std::size_t>(i)];
  }
  return data_.covariates.transpose() * r + theta / prior_variance_;
}

double LogisticPosterior::factor_potential(int factor, const Vec& x) const {
  if (factor == 0) return x.squaredNorm() / (2.0 * prior_variance_);
  const Eigen::Index i = factor - 1;
  const double z = data_.covariates.row(i).dot(x);
  return softplus(z) - data_.labels[static_cast<std::size_t>(i)] * z;
}

Vec LogisticPosterior::factor_gradient(int factor, const Vec& x) const {
  if (factor == 0) return x / prior_variance_;
  const Eigen::Index i = factor - 1;
  const double z = data_.covariates.row(i).dot(x);
  const double c = sigmoid(z) - data_.labels[static_cast<std::size_t>(i)];
  return c * data_.covariates.row(i).transpose();
}

double LogisticPosterior::factor_event_time(int factor, const Vec& x,
                                            const Vec& y, double e) const {
  if (factor == 0) {
    return linear_rate_event_time(y.dot(x) / prior_variance_,
                                  y.squaredNorm() / prior_variance_, e);
  }
  const Eigen::Index i = factor - 1;
  return logistic_event_time_dots(data_.labels[static_cast<std::size_t>(i)],
                                  data_.covariates.row(i).dot(x),
                                  data_.covariates.row(i).dot(y), e);
}

double LogisticPosterior::mean_nll(const Vec& theta) const {
  const Vec z = data_.covariates * theta;
  double nll = 0.0;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    nll += softplus(z[i]) - data_.labels[static_cast<std::size_t>(i)] * z[i];
  }
  return nll / static_cast<double>(z.size());
}

namespace {

struct RawTable {
  std::vector<std::vector<double>> rows;
};

RawTable parse_table(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    throw std::runtime_error("cannot open dataset file: " + path);
  }
  RawTable table;
  std::string line;
  long line_no = 0;
  std::size_t width = 0;
  bool comma = false, mode_known = false;
  while (std::getline(in, line)) {
    ++line_no;
    std::size_t start = line.find_first_not_of(" \t\r");
    if (start == std::string::npos || line[start] == '#') continue;
    if (!mode_known) {
      comma = line.find(',') != std::string::npos;
      mode_known = true;
    }
    std::vector<double> row;
    std::string cell;
    std::stringstream ss(line);
    auto push_cell = [&](const std::string& raw, std::size_t col) {
      std::size_t a = raw.find_first_not_of(" \t\r");
      if (a == std::string::npos) {
        throw std::runtime_error("row " + std::to_string(line_no) +
                                 ": empty field " + std::to_string(col + 1));
      }
      std::size_t b = raw.find_last_not_of(" \t\r");
      const char* first = raw.data() + a;
      const char* last = raw.data() + b + 1;
      double value = 0.0;
      auto [ptr, ec] = std::from_chars(first, last, value);
      if (ec != std::errc() || ptr != last || !std::isfinite(value)) {
        throw std::runtime_error("row " + std::to_string(line_no) +
                                 ": non-numeric or non-finite field '" +
                                 raw.substr(a, b - a + 1) + "'");
      }
      row.push_back(value);
    };
    if (comma) {
      std::size_t col = 0;
      while (std::getline(ss, cell, ',')) push_cell(cell, col++);
      if (!line.empty() && line.back() == ',') push_cell("", col);
    } else {
      while (ss >> cell) push_cell(cell, row.size());
    }
    if (row.empty()) continue;
    if (width == 0) {
      width = row.size();
      if (width < 2) {
        throw std::runtime_error("row " + std::to_string(line_no) +
                                 ": need at least one covariate and a label");
      }
    } else if (row.size() != width) {
      throw std::runtime_error("row " + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields, got " +
                               std::to_string(row.size()));
    }
    table.rows.push_back(std::move(row));
  }
  if (table.rows.empty()) {
    throw std::runtime_error("dataset file has no data rows: " + path);
  }
  return table;
}

}  // namespace

LogisticDataset load_uci_csv(const std::string& path, int label_column,
                             bool standardize, bool add_intercept) {
  RawTable table = parse_table(path);
  const int ncols = static_cast<int>(table.rows.front().size());
  int label = label_column < 0 ? ncols + label_column : label_column;
  if (label < 0 || label >= ncols) {
    throw std::runtime_error("label column " + std::to_string(label_column) +
                             " out of range for " + std::to_string(ncols) +
                             " columns");
  }
  const long n = static_cast<long>(table.rows.size());
  const int d = ncols - 1;

  double lab_lo = kInf, lab_hi = -kInf;
  for (const auto& row : table.rows) {
    const double v = row[static_cast<std::size_t>(label)];
    lab_lo = std::min(lab_lo, v);
    lab_hi = std::max(lab_hi, v);
  }
  if (lab_lo == lab_hi) {
    throw std::runtime_error("label column is constant; need two classes");
  }
  LogisticDataset data;
  data.labels.reserve(static_cast<std::size_t>(n));
  data.covariates = Mat(n, d + (add_intercept ? 1 : 0));
  for (long r = 0; r < n; ++r) {
    const auto& row = table.rows[static_cast<std::size_t>(r)];
    const double v = row[static_cast<std::size_t>(label)];
    if (v != lab_lo && v != lab_hi) {
      throw std::runtime_error("row " + std::to_string(r + 1) +
                               ": label has more than two distinct values");
    }
    data.labels.push_back(v == lab_hi ? 1 : 0);
    int c = 0;
    for (int j = 0; j < ncols; ++j) {
      if (j == label) continue;
      data.covariates(r, c++) = row[static_cast<std::size_t>(j)];
    }
  }
  if (standardize) {
    for (int j = 0; j < d; ++j) {
      auto col = data.covariates.col(j);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      if (sd < 1e-12) {
        throw std::runtime_error("covariate column " + std::to_string(j) +
                                 " has zero variance; cannot standardize");
      }
      col = (col.array() - mean) / sd;
    }
  }
  if (add_intercept) {
    data.covariates.col(d).setOnes();
  }
  for (int j = 0; j < d; ++j) {
    data.column_names.push_back("x" + std::to_string(j));
  }
  if (add_intercept) data.column_names.push_back("intercept");
  return data;
}

}  // namespace fec
