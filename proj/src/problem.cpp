#include "lsqopt/problem.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iostream>
#include <sstream>

#include "lsqopt/errors.hpp"

namespace lsqopt {

std::string ProblemSpec::label() const {
  char buf[64];
  auto fmt_num = [](double v, char* out, std::size_t cap) {
    if (v == std::floor(v) && std::abs(v) < 1e15) {
      std::snprintf(out, cap, "%lld", static_cast<long long>(v));
    } else {
      std::snprintf(out, cap, "%g", v);
    }
  };
  char kappa_s[24], q_s[24];
  fmt_num(kappa, kappa_s, sizeof kappa_s);
  fmt_num(q, q_s, sizeof q_s);
  std::snprintf(buf, sizeof buf, "(%s, %s, %s)",
                decay == DecayKind::exponential ? "ED" : "AD", kappa_s, q_s);
  return buf;
}

std::vector<double> decay_singular_values(const ProblemSpec& spec) {
  if (spec.d < 2) throw domain_error("decay_singular_values: d must be >= 2");
  if (!(spec.kappa > 1.0)) throw domain_error("decay_singular_values: kappa must be > 1");
  if (!(spec.q > 0.0)) throw domain_error("decay_singular_values: q must be > 0");
  if (!(spec.lambda_d > 0.0)) throw domain_error("decay_singular_values: lambda_d must be > 0");
  if (spec.decay == DecayKind::exponential && spec.q > 1.0) {
    throw domain_error("decay_singular_values: exponential decay needs q <= 1");
  }

  const double d = static_cast<double>(spec.d);
  const double gap = spec.lambda_d * (spec.kappa - 1.0);
  std::vector<double> s(spec.d);
  for (std::size_t j = 1; j <= spec.d; ++j) {
    const double frac = (d - static_cast<double>(j)) / (d - 1.0);
    double lam;
    if (spec.decay == DecayKind::exponential) {
      lam = spec.lambda_d + frac * gap * std::pow(spec.q, static_cast<double>(j - 1));
    } else {
      lam = spec.lambda_d + std::pow(frac, spec.q) * gap;
    }
    s[j - 1] = std::sqrt(lam);
  }
  return s;
}

namespace {

// Modified Gram-Schmidt with one reorthogonalization pass. R's diagonal is the
// (positive) column norm, so the factor is already the Haar representative.
bool try_orthonormalize(DenseMatrix& q) {
  const std::size_t n = q.rows();
  const std::size_t d = q.cols();
  std::vector<double> col(n);
  for (std::size_t j = 0; j < d; ++j) {
    for (std::size_t i = 0; i < n; ++i) col[i] = q(i, j);
    for (int pass = 0; pass < 2; ++pass) {
      for (std::size_t k = 0; k < j; ++k) {
        double proj = 0.0;
        for (std::size_t i = 0; i < n; ++i) proj += q(i, k) * col[i];
        for (std::size_t i = 0; i < n; ++i) col[i] -= proj * q(i, k);
      }
    }
    double nrm = 0.0;
    for (double v : col) nrm += v * v;
    nrm = std::sqrt(nrm);
    if (!(nrm > 1e-300)) return false;
    for (std::size_t i = 0; i < n; ++i) q(i, j) = col[i] / nrm;
  }
  return true;
}

}  // namespace

DenseMatrix random_orthonormal(std::size_t n, std::size_t d, Rng& rng) {
  if (n < d) throw config_error("random_orthonormal: n must be >= d");
  for (int attempt = 0; attempt < 2; ++attempt) {
    DenseMatrix q(n, d);
    for (double& v : q.data()) v = rng.normal();
    if (try_orthonormalize(q)) return q;
  }
  throw numerical_error("random_orthonormal: rank-deficient draw twice in a row");
}

LlspInstance assemble_instance(const ProblemSpec& spec) {
  Rng rng(spec.seed);
  return assemble_instance(spec, rng);
}

LlspInstance assemble_instance(const ProblemSpec& spec, Rng& rng) {
  if (spec.n < spec.d) throw domain_error("assemble_instance: n must be >= d");
  const auto s = decay_singular_values(spec);
  const DenseMatrix u = random_orthonormal(spec.n, spec.d, rng);
  const DenseMatrix v = random_orthonormal(spec.d, spec.d, rng);

  // A = (U Sigma) V^T
  DenseMatrix us = u;
  for (std::size_t i = 0; i < spec.n; ++i) {
    auto row = us.row(i);
    for (std::size_t j = 0; j < spec.d; ++j) row[j] *= s[j];
  }
  DenseMatrix a(spec.n, spec.d);
  for (std::size_t i = 0; i < spec.n; ++i) {
    const auto usrow = us.row(i);
    auto arow = a.row(i);
    for (std::size_t j = 0; j < spec.d; ++j) arow[j] = dot(usrow, v.row(j));
  }

  LlspInstance inst;
  inst.a = std::move(a);
  inst.is_consistent = spec.consistent;

  if (spec.consistent) {
    inst.x_star.resize(spec.d);
    for (double& x : inst.x_star) x = rng.normal();
    inst.b = mat_vec(inst.a, inst.x_star);
    inst.r_star.assign(spec.n, 0.0);
  } else {
    std::vector<double> x_tilde(spec.d);
    for (double& x : x_tilde) x = rng.normal();
    std::vector<double> tau(spec.n);
    for (double& t : tau) t = rng.normal();
    const double tn = norm2(tau);
    for (double& t : tau) t *= spec.noise_radius / tn;
    inst.b = mat_vec(inst.a, x_tilde);
    for (std::size_t i = 0; i < spec.n; ++i) inst.b[i] += tau[i];
    inst.x_star = normal_solve(inst.a, inst.b);
    inst.r_star = mat_vec(inst.a, inst.x_star);
    for (std::size_t i = 0; i < spec.n; ++i) inst.r_star[i] -= inst.b[i];
  }
  inst.spectral = spectral_summary(inst.a);
  return inst;
}

namespace {

bool parse_double(const std::string& field, double& out) {
  const char* begin = field.c_str();
  const char* end = begin + field.size();
  while (begin < end && (*begin == ' ' || *begin == '\t')) ++begin;
  while (end > begin && (end[-1] == ' ' || end[-1] == '\t' || end[-1] == '\r')) --end;
  if (begin == end) return false;
  const auto res = std::from_chars(begin, end, out);
  return res.ec == std::errc{} && res.ptr == end;
}

std::vector<std::string> split_csv_line(const std::string& line) {
  std::vector<std::string> fields;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  fields.push_back(cur);
  return fields;
}

}  // namespace

LlspInstance load_csv_standardized(const std::string& path, std::size_t target_column_index) {
  std::ifstream in(path);
  if (!in) throw parse_error("cannot open CSV file: " + path);

  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t lineno = 0;
  std::size_t ncols = 0;
  bool first_data_line = true;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto fields = split_csv_line(line);
    std::vector<double> vals(fields.size());
    bool all_numeric = true;
    std::size_t bad_col = 0;
    for (std::size_t c = 0; c < fields.size(); ++c) {
      if (!parse_double(fields[c], vals[c])) {
        all_numeric = false;
        bad_col = c;
        break;
      }
    }
    if (!all_numeric) {
      if (first_data_line) continue;  // header row auto-detected
      throw parse_error("non-numeric cell at row " + std::to_string(lineno) + ", column " +
                        std::to_string(bad_col + 1));
    }
    if (ncols == 0) {
      ncols = vals.size();
    } else if (vals.size() != ncols) {
      throw parse_error("ragged CSV row at line " + std::to_string(lineno));
    }
    first_data_line = false;
    rows.push_back(std::move(vals));
  }
  if (ncols == 0) throw parse_error("CSV contains no numeric rows: " + path);
  if (target_column_index >= ncols) {
    throw config_error("target column index out of range");
  }

  const std::size_t n = rows.size();
  const std::size_t d_raw = ncols - 1;
  if (n < d_raw + 1) throw domain_error("CSV has fewer than d+1 rows");

  // column means / sample stds
  std::vector<double> mean(ncols, 0.0), var(ncols, 0.0);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < ncols; ++c) mean[c] += r[c];
  for (double& m : mean) m /= static_cast<double>(n);
  for (const auto& r : rows)
    for (std::size_t c = 0; c < ncols; ++c) {
      const double dv = r[c] - mean[c];
      var[c] += dv * dv;
    }
  for (double& v : var) v /= static_cast<double>(n - 1);

  std::vector<std::size_t> feature_cols;
  for (std::size_t c = 0; c < ncols; ++c) {
    if (c == target_column_index) continue;
    if (var[c] <= 0.0) {
      std::cerr << "warning: dropping zero-variance feature column " << (c + 1) << "\n";
      continue;
    }
    feature_cols.push_back(c);
  }
  if (feature_cols.empty()) throw domain_error("no usable feature columns in CSV");

  LlspInstance inst;
  inst.a = DenseMatrix(n, feature_cols.size());
  inst.b.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    auto arow = inst.a.row(i);
    for (std::size_t j = 0; j < feature_cols.size(); ++j) {
      const std::size_t c = feature_cols[j];
      arow[j] = (rows[i][c] - mean[c]) / std::sqrt(var[c]);
    }
    inst.b[i] = rows[i][target_column_index] - mean[target_column_index];
  }
  inst.a.ensure_finite("load_csv_standardized");
  inst.is_consistent = false;
  inst.x_star = normal_solve(inst.a, inst.b);
  inst.r_star = mat_vec(inst.a, inst.x_star);
  for (std::size_t i = 0; i < n; ++i) inst.r_star[i] -= inst.b[i];
  inst.spectral = spectral_summary(inst.a);
  return inst;
}

namespace {

constexpr char kMagic[8] = {'L', 'S', 'Q', 'I', 'N', 'S', 'T', '1'};

void write_u64(std::ofstream& out, std::uint64_t v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof v);
}

void write_f64s(std::ofstream& out, const std::vector<double>& v) {
  out.write(reinterpret_cast<const char*>(v.data()),
            static_cast<std::streamsize>(v.size() * sizeof(double)));
}

std::uint64_t read_u64(std::ifstream& in) {
  std::uint64_t v = 0;
  in.read(reinterpret_cast<char*>(&v), sizeof v);
  return v;
}

void read_f64s(std::ifstream& in, std::vector<double>& v, std::size_t count) {
  v.resize(count);
  in.read(reinterpret_cast<char*>(v.data()),
          static_cast<std::streamsize>(count * sizeof(double)));
}

}  // namespace

void save_instance(const LlspInstance& inst, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw parse_error("cannot open instance file for writing: " + path);
  out.write(kMagic, sizeof kMagic);
  write_u64(out, inst.n());
  write_u64(out, inst.d());
  write_u64(out, inst.is_consistent ? 1 : 0);
  write_f64s(out, inst.a.data());
  write_f64s(out, inst.b);
  write_f64s(out, inst.x_star);
  write_f64s(out, inst.r_star);
  const std::vector<double> spec_scalars = {inst.spectral.lambda_max, inst.spectral.lambda_min,
                                            inst.spectral.fro_norm_sq,
                                            inst.spectral.spectral_norm};
  write_f64s(out, spec_scalars);
  write_f64s(out, inst.spectral.row_norms_sq);
  if (!out) throw parse_error("write failed: " + path);
}

LlspInstance load_instance(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw parse_error("cannot open instance file: " + path);
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof kMagic) != 0) {
    throw parse_error("not an instance file (bad magic): " + path);
  }
  const std::uint64_t n = read_u64(in);
  const std::uint64_t d = read_u64(in);
  const std::uint64_t consistent = read_u64(in);
  LlspInstance inst;
  std::vector<double> adata;
  read_f64s(in, adata, n * d);
  inst.a = DenseMatrix(n, d, std::move(adata));
  read_f64s(in, inst.b, n);
  read_f64s(in, inst.x_star, d);
  read_f64s(in, inst.r_star, n);
  std::vector<double> spec_scalars;
  read_f64s(in, spec_scalars, 4);
  inst.spectral.lambda_max = spec_scalars[0];
  inst.spectral.lambda_min = spec_scalars[1];
  inst.spectral.fro_norm_sq = spec_scalars[2];
  inst.spectral.spectral_norm = spec_scalars[3];
  read_f64s(in, inst.spectral.row_norms_sq, n);
  inst.is_consistent = consistent != 0;
  if (!in) throw parse_error("truncated instance file: " + path);
  return inst;
}

}  // namespace lsqopt
