// Copyright 2026 The diarkit Authors.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "diarkit/backend.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <filesystem>
#include <map>
#include <numbers>

#include <json.hpp>

#include "diarkit/timeline.h"

namespace diarkit {

Eigen::VectorXd length_normalize(const Eigen::VectorXd &v) {
  const double norm = v.norm();
  if (!(norm > 0.0)) throw DataError("cannot length-normalize a zero vector");
  return v / norm;
}

namespace {

struct ClassStats {
  std::vector<std::string> names;
  std::vector<std::vector<Eigen::Index>> members;
};

ClassStats group_labels(std::span<const std::string> labels, Eigen::Index rows) {
  if (static_cast<Eigen::Index>(labels.size()) != rows)
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(rows) + " rows");
  std::map<std::string, std::vector<Eigen::Index>> by_label;
  for (Eigen::Index i = 0; i < rows; ++i) by_label[labels[i]].push_back(i);
  ClassStats out;
  for (auto &[name, idx] : by_label) {
    out.names.push_back(name);
    out.members.push_back(std::move(idx));
  }
  return out;
}

Eigen::MatrixXd add_ridge(const Eigen::MatrixXd &cov, double fallback_scale) {
  const auto d = cov.rows();
  double scale = cov.trace() / static_cast<double>(d);
  if (!(scale > 1e-300)) scale = fallback_scale > 1e-300 ? fallback_scale : 1.0;
  return cov + kRidge * scale * Eigen::MatrixXd::Identity(d, d);
}

// Flips each column so its largest-magnitude entry is positive.
void fix_signs(Eigen::MatrixXd &m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j) {
    Eigen::Index arg = 0;
    m.col(j).cwiseAbs().maxCoeff(&arg);
    if (m(arg, j) < 0) m.col(j) = -m.col(j);
  }
}

Eigen::MatrixXd symmetrize(const Eigen::MatrixXd &m) { return 0.5 * (m + m.transpose()); }

}  // namespace

LdaResult train_lda(const Eigen::MatrixXd &rows, std::span<const std::string> labels,
                    int target_dim) {
  if (target_dim < 1) throw ConfigError("LDA target dimension must be positive");
  const ClassStats classes = group_labels(labels, rows.rows());
  if (classes.names.size() < 2) throw DataError("LDA needs at least 2 classes");
  for (std::size_t c = 0; c < classes.names.size(); ++c) {
    if (classes.members[c].size() < 2)
      throw DataError("LDA class '" + classes.names[c] + "' has fewer than 2 samples");
  }
  const auto dim = rows.cols();
  const double n = static_cast<double>(rows.rows());

  LdaResult out;
  out.mean = rows.colwise().mean().transpose();
  Eigen::MatrixXd sw = Eigen::MatrixXd::Zero(dim, dim);
  Eigen::MatrixXd sb = Eigen::MatrixXd::Zero(dim, dim);
  for (const auto &idx : classes.members) {
    Eigen::VectorXd class_mean = Eigen::VectorXd::Zero(dim);
    for (auto i : idx) class_mean += rows.row(i).transpose();
    class_mean /= static_cast<double>(idx.size());
    for (auto i : idx) {
      const Eigen::VectorXd d = rows.row(i).transpose() - class_mean;
      sw.noalias() += d * d.transpose();
    }
    const Eigen::VectorXd d = class_mean - out.mean;
    sb.noalias() += static_cast<double>(idx.size()) * d * d.transpose();
  }
  sw = add_ridge(symmetrize(sw / n), sb.trace() / n / static_cast<double>(dim));
  sb = symmetrize(sb / n);

  const int num_classes = static_cast<int>(classes.names.size());
  out.effective_dim = std::min<int>({target_dim, num_classes - 1, static_cast<int>(dim)});
  if (out.effective_dim < target_dim) {
    out.warnings.push_back("LDA dimension clipped from " + std::to_string(target_dim) + " to " +
                           std::to_string(out.effective_dim) + " (" +
                           std::to_string(num_classes) + " classes, input dim " +
                           std::to_string(dim) + ")");
  }

  Eigen::GeneralizedSelfAdjointEigenSolver<Eigen::MatrixXd> solver(sb, sw);
  if (solver.info() != Eigen::Success) throw DataError("LDA eigendecomposition failed");
  // Eigenvalues come back ascending; keep the largest.
  const auto r = out.effective_dim;
  out.basis = solver.eigenvectors().rightCols(r).rowwise().reverse();
  out.eigenvalues = solver.eigenvalues().tail(r).reverse();
  fix_signs(out.basis);
  return out;
}

Eigen::VectorXd PldaModel::project(const Eigen::VectorXd &raw) const {
  if (raw.size() != mu.size())
    throw DataError("embedding dim " + std::to_string(raw.size()) + " does not match model dim " +
                    std::to_string(mu.size()));
  Eigen::VectorXd y = lda_basis.transpose() * (raw - mu);
  return length_norm ? length_normalize(y) : y;
}

Eigen::VectorXd PldaModel::diagonalize(const Eigen::VectorXd &raw) const {
  return diag_transform.transpose() * (project(raw) - plda_mean);
}

Eigen::MatrixXd PldaModel::diagonalize_rows(const Eigen::MatrixXd &raw) const {
  Eigen::MatrixXd out(raw.rows(), plda_dim());
  for (Eigen::Index i = 0; i < raw.rows(); ++i) {
    out.row(i) = diagonalize(raw.row(i).transpose()).transpose();
  }
  return out;
}

PldaModel train_plda(const Eigen::MatrixXd &projected, std::span<const std::string> labels) {
  const ClassStats classes = group_labels(labels, projected.rows());
  if (classes.names.size() < 2) throw DataError("PLDA needs at least 2 classes");
  const auto r = projected.cols();
  const double n = static_cast<double>(projected.rows());

  PldaModel model;
  model.mu = Eigen::VectorXd::Zero(r);
  model.lda_basis = Eigen::MatrixXd::Identity(r, r);
  model.length_norm = false;
  model.plda_mean = projected.colwise().mean().transpose();

  Eigen::MatrixXd between = Eigen::MatrixXd::Zero(r, r);
  Eigen::MatrixXd within = Eigen::MatrixXd::Zero(r, r);
  double within_count = 0.0;
  for (const auto &idx : classes.members) {
    Eigen::VectorXd class_mean = Eigen::VectorXd::Zero(r);
    for (auto i : idx) class_mean += projected.row(i).transpose();
    class_mean /= static_cast<double>(idx.size());
    const Eigen::VectorXd d = class_mean - model.plda_mean;
    between.noalias() += static_cast<double>(idx.size()) * d * d.transpose();
    if (idx.size() >= 2) {
      for (auto i : idx) {
        const Eigen::VectorXd e = projected.row(i).transpose() - class_mean;
        within.noalias() += e * e.transpose();
      }
      within_count += static_cast<double>(idx.size()) - 1.0;
    }
  }
  if (within_count <= 0.0) throw DataError("PLDA needs at least one class with 2 samples");
  model.between = symmetrize(between / n);
  model.within =
      add_ridge(symmetrize(within / within_count), model.between.trace() / static_cast<double>(r));

  // Whiten W, then diagonalize the whitened B.
  Eigen::LLT<Eigen::MatrixXd> chol(model.within);
  if (chol.info() != Eigen::Success) throw DataError("within-class covariance is not positive definite");
  const Eigen::MatrixXd l_inv =
      chol.matrixL().solve(Eigen::MatrixXd::Identity(r, r));
  const Eigen::MatrixXd whitened_b = symmetrize(l_inv * model.between * l_inv.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(whitened_b);
  if (eig.info() != Eigen::Success) throw DataError("PLDA eigendecomposition failed");
  const Eigen::VectorXd values = eig.eigenvalues().reverse();
  Eigen::MatrixXd vectors = eig.eigenvectors().rowwise().reverse();
  fix_signs(vectors);
  Eigen::Index keep = 0;
  while (keep < values.size() && values(keep) > kPhiFloor) ++keep;
  model.phi = values.head(keep);
  model.diag_transform = (l_inv.transpose() * vectors).leftCols(keep);
  return model;
}

PldaModel train_backend(const Eigen::MatrixXd &rows, std::span<const std::string> labels,
                        int lda_dim) {
  LdaResult lda = train_lda(rows, labels, lda_dim);
  Eigen::MatrixXd projected(rows.rows(), lda.effective_dim);
  for (Eigen::Index i = 0; i < rows.rows(); ++i) {
    const Eigen::VectorXd y = lda.basis.transpose() * (rows.row(i).transpose() - lda.mean);
    projected.row(i) = length_normalize(y).transpose();
  }
  PldaModel model = train_plda(projected, labels);
  model.mu = lda.mean;
  model.lda_basis = lda.basis;
  model.length_norm = true;
  model.warnings = std::move(lda.warnings);
  return model;
}

namespace {

struct LlrCoefficients {
  Eigen::ArrayXd square;  // weight on a^2 + b^2
  Eigen::ArrayXd cross;   // weight on a*b
  double constant = 0.0;
};

LlrCoefficients llr_coefficients(const Eigen::VectorXd &phi) {
  const Eigen::ArrayXd p = phi.array();
  LlrCoefficients c;
  c.square = -0.5 * (p + 1.0) / (2.0 * p + 1.0) + 0.5 / (p + 1.0);
  c.cross = p / (2.0 * p + 1.0);
  c.constant = (-0.5 * (2.0 * p + 1.0).log() + (p + 1.0).log()).sum();
  return c;
}

}  // namespace

double plda_llr_diagonal(const Eigen::VectorXd &phi, const Eigen::VectorXd &x1,
                         const Eigen::VectorXd &x2) {
  if (x1.size() != phi.size() || x2.size() != phi.size())
    throw DataError("PLDA vectors do not match model dimension");
  const auto c = llr_coefficients(phi);
  const Eigen::ArrayXd a = x1.array();
  const Eigen::ArrayXd b = x2.array();
  return (c.square * (a.square() + b.square())).sum() + (c.cross * a * b).sum() + c.constant;
}

double plda_llr(const PldaModel &model, const Eigen::VectorXd &e1, const Eigen::VectorXd &e2) {
  return plda_llr_diagonal(model.phi, model.diagonalize(e1), model.diagonalize(e2));
}

double cosine_similarity(const Eigen::VectorXd &a, const Eigen::VectorXd &b) {
  if (a.size() != b.size()) throw DataError("cosine of vectors with different dims");
  return length_normalize(a).dot(length_normalize(b));
}

SimilarityMatrix similarity_matrix(const Scorer &scorer, const Eigen::MatrixXd &rows) {
  const auto n = rows.rows();
  SimilarityMatrix out;
  if (const auto *model = std::get_if<PldaModel>(&scorer)) {
    const Eigen::MatrixXd x = model->diagonalize_rows(rows);
    const auto c = llr_coefficients(model->phi);
    const Eigen::VectorXd q = x.array().square().matrix() * c.square.matrix();
    const Eigen::MatrixXd xc = x * c.cross.matrix().asDiagonal();
    Eigen::MatrixXd cross = xc * x.transpose();
    out.values.resize(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      for (Eigen::Index j = i; j < n; ++j) {
        const double s = q(i) + q(j) + cross(i, j) + c.constant;
        out.values(i, j) = s;
        out.values(j, i) = s;
      }
    }
  } else {
    Eigen::MatrixXd unit(n, rows.cols());
    for (Eigen::Index i = 0; i < n; ++i) unit.row(i) = length_normalize(rows.row(i).transpose());
    Eigen::MatrixXd dots = unit * unit.transpose();
    out.values = dots.triangularView<Eigen::Upper>();
    out.values.triangularView<Eigen::StrictlyLower>() = out.values.transpose();
  }
  return out;
}

namespace {

void append_array(nlohmann::json &arrays, std::string &blob, const std::string &name,
                  const Eigen::MatrixXd &m) {
  arrays.push_back({{"name", name}, {"rows", m.rows()}, {"cols", m.cols()},
                    {"offset", blob.size() / 4}});
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(m(i, j)));
      for (int b = 0; b < 4; ++b) blob.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
    }
  }
}

Eigen::MatrixXd read_array(const nlohmann::json &header, const std::string &blob,
                           const std::string &name) {
  for (const auto &a : header.at("arrays")) {
    if (a.at("name") != name) continue;
    const auto rows = a.at("rows").get<Eigen::Index>();
    const auto cols = a.at("cols").get<Eigen::Index>();
    const auto offset = a.at("offset").get<std::size_t>();
    if ((offset + static_cast<std::size_t>(rows * cols)) * 4 > blob.size())
      throw DataError("PLDA sidecar too short for array '" + name + "'");
    Eigen::MatrixXd m(rows, cols);
    std::size_t pos = offset * 4;
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) {
        std::uint32_t bits = 0;
        for (int b = 0; b < 4; ++b)
          bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(blob[pos++])) << (8 * b);
        m(i, j) = std::bit_cast<float>(bits);
      }
    }
    return m;
  }
  throw DataError("PLDA model lacks array '" + name + "'");
}

}  // namespace

void save_plda(const PldaModel &model, const std::string &json_path) {
  namespace fs = std::filesystem;
  const fs::path path(json_path);
  const fs::path sidecar = fs::path(path).replace_extension(".bin");
  std::string blob;
  nlohmann::json arrays = nlohmann::json::array();
  append_array(arrays, blob, "mu", model.mu);
  append_array(arrays, blob, "lda_basis", model.lda_basis);
  append_array(arrays, blob, "plda_mean", model.plda_mean);
  append_array(arrays, blob, "between", model.between);
  append_array(arrays, blob, "within", model.within);
  append_array(arrays, blob, "diag_transform", model.diag_transform);
  append_array(arrays, blob, "phi", model.phi);
  nlohmann::json header = {{"format", "diarkit-plda"},
                           {"version", 1},
                           {"input_dim", model.input_dim()},
                           {"lda_dim", model.lda_dim()},
                           {"plda_dim", model.plda_dim()},
                           {"length_norm", model.length_norm},
                           {"dtype", "float32-le"},
                           {"layout", "row-major"},
                           {"sidecar", sidecar.filename().string()},
                           {"arrays", arrays}};
  write_text_file(sidecar.string(), blob);
  write_text_file(path.string(), header.dump(2) + "\n");
}

PldaModel load_plda(const std::string &json_path) {
  namespace fs = std::filesystem;
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(read_text_file(json_path));
  } catch (const nlohmann::json::exception &e) {
    throw DataError(json_path + ": invalid JSON: " + e.what());
  }
  try {
    if (header.at("format") != "diarkit-plda") throw DataError(json_path + ": not a PLDA model");
    if (header.at("version") != 1) throw DataError(json_path + ": unsupported model version");
    const fs::path sidecar = fs::path(json_path).parent_path() / header.at("sidecar").get<std::string>();
    const std::string blob = read_text_file(sidecar.string());
    PldaModel m;
    m.mu = read_array(header, blob, "mu").col(0);
    m.lda_basis = read_array(header, blob, "lda_basis");
    m.plda_mean = read_array(header, blob, "plda_mean").col(0);
    m.between = read_array(header, blob, "between");
    m.within = read_array(header, blob, "within");
    m.diag_transform = read_array(header, blob, "diag_transform");
    const Eigen::MatrixXd phi = read_array(header, blob, "phi");
    m.phi = phi.size() ? Eigen::VectorXd(phi.col(0)) : Eigen::VectorXd();
    m.length_norm = header.at("length_norm").get<bool>();
    if (m.lda_basis.rows() != m.mu.size() || m.diag_transform.cols() != m.phi.size() ||
        m.diag_transform.rows() != m.lda_basis.cols())
      throw DataError(json_path + ": inconsistent array shapes");
    return m;
  } catch (const nlohmann::json::exception &e) {
    throw DataError(json_path + ": " + e.what());
  }
}

}  // namespace diarkit
