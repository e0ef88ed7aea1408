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

#include "diarkit/embedstore.h"

#include <algorithm>
#include <bit>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <map>
#include <numeric>
#include <random>

#include <json.hpp>

namespace diarkit {

EmbeddingSet::EmbeddingSet(RowMatrixF rows, std::vector<RowMeta> meta)
    : rows_(std::move(rows)), meta_(std::move(meta)) {
  if (static_cast<std::size_t>(rows_.rows()) != meta_.size())
    throw DataError("embedding set has " + std::to_string(rows_.rows()) + " rows but " +
                    std::to_string(meta_.size()) + " meta entries");
  if (!rows_.allFinite()) throw DataError("embedding set contains non-finite values");
  for (const auto &m : meta_) {
    if (m.stream < 0) throw DataError("negative stream index");
  }
}

EmbeddingSet EmbeddingSet::from_matrix(const Eigen::MatrixXd &values) {
  std::vector<RowMeta> meta;
  meta.reserve(values.rows());
  for (Eigen::Index t = 0; t < values.rows(); ++t) {
    meta.push_back({"matrix", Segment(t, 1), 0, std::nullopt});
  }
  return EmbeddingSet(values.cast<float>(), std::move(meta));
}

EmbeddingSet EmbeddingSet::select(std::span<const std::size_t> indices) const {
  RowMatrixF rows(indices.size(), rows_.cols());
  std::vector<RowMeta> meta;
  meta.reserve(indices.size());
  for (std::size_t i = 0; i < indices.size(); ++i) {
    rows.row(i) = rows_.row(indices[i]);
    meta.push_back(meta_[indices[i]]);
  }
  return EmbeddingSet(std::move(rows), std::move(meta));
}

EmbeddingSet EmbeddingSet::select_recording(const std::string &recording_id) const {
  std::vector<std::size_t> idx;
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    if (meta_[i].recording_id == recording_id) idx.push_back(i);
  }
  return select(idx);
}

std::vector<std::string> EmbeddingSet::recording_ids() const {
  std::vector<std::string> out;
  for (const auto &m : meta_) {
    if (std::find(out.begin(), out.end(), m.recording_id) == out.end()) out.push_back(m.recording_id);
  }
  return out;
}

std::vector<std::string> EmbeddingSet::true_labels() const {
  std::vector<std::string> out;
  out.reserve(meta_.size());
  for (std::size_t i = 0; i < meta_.size(); ++i) {
    if (!meta_[i].true_label) throw DataError("row " + std::to_string(i) + " has no label");
    out.push_back(*meta_[i].true_label);
  }
  return out;
}

namespace {

constexpr char kMagic[4] = {'D', 'K', 'E', 'B'};
constexpr std::uint16_t kVersion = 1;

template <typename T>
void put_le(std::string &out, T value) {
  using U = std::make_unsigned_t<T>;
  auto u = static_cast<U>(value);
  for (std::size_t i = 0; i < sizeof(T); ++i) {
    out.push_back(static_cast<char>(u & 0xFF));
    u = static_cast<U>(u >> 8);
  }
}

class Reader {
 public:
  explicit Reader(std::string_view bytes) : bytes_(bytes) {}

  template <typename T>
  T get_le(const char *what) {
    need(sizeof(T), what);
    std::make_unsigned_t<T> u = 0;
    for (std::size_t i = 0; i < sizeof(T); ++i) {
      u |= static_cast<std::make_unsigned_t<T>>(static_cast<unsigned char>(bytes_[pos_ + i]))
           << (8 * i);
    }
    pos_ += sizeof(T);
    return static_cast<T>(u);
  }

  std::string_view take(std::size_t n, const char *what) {
    need(n, what);
    auto out = bytes_.substr(pos_, n);
    pos_ += n;
    return out;
  }

  std::size_t remaining() const { return bytes_.size() - pos_; }

 private:
  void need(std::size_t n, const char *what) {
    if (bytes_.size() - pos_ < n) throw DataError(std::string("truncated .dkeb: missing ") + what);
  }

  std::string_view bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::string emb_serialize(const EmbeddingSet &set) {
  if (!set.rows().allFinite()) throw DataError("refusing to write non-finite embeddings");
  std::string out(kMagic, 4);
  put_le<std::uint16_t>(out, kVersion);
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.dim()));
  put_le<std::uint32_t>(out, static_cast<std::uint32_t>(set.size()));
  const float *data = set.rows().data();
  for (Eigen::Index i = 0; i < set.rows().size(); ++i) {
    put_le<std::uint32_t>(out, std::bit_cast<std::uint32_t>(data[i]));
  }
  nlohmann::json rows = nlohmann::json::array();
  for (const auto &m : set.meta()) {
    nlohmann::json row = {{"recording_id", m.recording_id},
                          {"onset_ms", m.window.onset()},
                          {"duration_ms", m.window.duration()},
                          {"stream", m.stream}};
    if (m.true_label) row["label"] = *m.true_label;
    rows.push_back(std::move(row));
  }
  const std::string meta = nlohmann::json{{"rows", rows}}.dump();
  put_le<std::uint64_t>(out, meta.size());
  out += meta;
  return out;
}

EmbeddingSet emb_deserialize(std::string_view bytes) {
  Reader in(bytes);
  if (in.take(4, "magic") != std::string_view(kMagic, 4)) throw DataError("bad .dkeb magic");
  const auto version = in.get_le<std::uint16_t>("version");
  if (version != kVersion) throw DataError("unsupported .dkeb version " + std::to_string(version));
  const auto dim = in.get_le<std::uint32_t>("dim");
  const auto n = in.get_le<std::uint32_t>("row count");
  const std::uint64_t count = static_cast<std::uint64_t>(dim) * n;
  if (count * 4 > in.remaining()) throw DataError("truncated .dkeb: payload shorter than header");
  RowMatrixF rows(n, dim);
  float *data = rows.data();
  for (std::uint64_t i = 0; i < count; ++i) {
    data[i] = std::bit_cast<float>(in.get_le<std::uint32_t>("payload"));
  }
  const auto meta_len = in.get_le<std::uint64_t>("meta length");
  if (meta_len > in.remaining()) throw DataError("truncated .dkeb: meta block");
  const auto meta_text = in.take(meta_len, "meta");
  if (in.remaining() != 0) throw DataError("trailing bytes after .dkeb meta block");

  nlohmann::json meta_json;
  try {
    meta_json = nlohmann::json::parse(meta_text);
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid .dkeb meta JSON: ") + e.what());
  }
  if (!meta_json.contains("rows") || !meta_json["rows"].is_array())
    throw DataError(".dkeb meta lacks a rows array");
  const auto &jrows = meta_json["rows"];
  if (jrows.size() != n)
    throw DataError(".dkeb meta has " + std::to_string(jrows.size()) + " rows, header says " +
                    std::to_string(n));
  std::vector<RowMeta> meta;
  meta.reserve(n);
  try {
    for (const auto &r : jrows) {
      RowMeta m;
      m.recording_id = r.at("recording_id").get<std::string>();
      m.window = Segment(r.at("onset_ms").get<Millis>(), r.at("duration_ms").get<Millis>());
      m.stream = r.value("stream", 0);
      if (r.contains("label") && !r["label"].is_null()) m.true_label = r["label"].get<std::string>();
      meta.push_back(std::move(m));
    }
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid .dkeb meta row: ") + e.what());
  }
  return EmbeddingSet(std::move(rows), std::move(meta));
}

void emb_write(const EmbeddingSet &set, const std::string &path) {
  write_text_file(path, emb_serialize(set));
}

EmbeddingSet emb_read(const std::string &path) {
  try {
    return emb_deserialize(read_text_file(path));
  } catch (const DataError &e) {
    throw DataError(path + ": " + e.what());
  }
}

EmbeddingSet mean_by_cluster(const EmbeddingSet &set, std::span<const int> labels) {
  if (labels.size() != set.size())
    throw DataError("label count " + std::to_string(labels.size()) + " does not match " +
                    std::to_string(set.size()) + " rows");
  std::map<int, std::vector<std::size_t>> members;
  for (std::size_t i = 0; i < labels.size(); ++i) members[labels[i]].push_back(i);
  RowMatrixF rows(members.size(), set.dim());
  std::vector<RowMeta> meta;
  Eigen::Index r = 0;
  for (const auto &[label, idx] : members) {
    Eigen::RowVectorXd sum = Eigen::RowVectorXd::Zero(set.dim());
    Millis start = set.meta()[idx.front()].window.onset();
    Millis end = set.meta()[idx.front()].window.end();
    for (auto i : idx) {
      sum += set.rows().row(i).cast<double>();
      start = std::min(start, set.meta()[i].window.onset());
      end = std::max(end, set.meta()[i].window.end());
    }
    rows.row(r++) = (sum / static_cast<double>(idx.size())).cast<float>();
    meta.push_back({set.meta()[idx.front()].recording_id, Segment::from_bounds(start, end), 0,
                    std::to_string(label)});
  }
  return EmbeddingSet(std::move(rows), std::move(meta));
}

void SynthConfig::validate() const {
  if (n_recordings < 0 || first_recording < 0) throw ConfigError("recording counts must be >= 0");
  if (n_classes < 1) throw ConfigError("need at least one class");
  if (classes_per_recording < 0 || classes_per_recording > n_classes)
    throw ConfigError("classes_per_recording must lie in [0, n_classes]");
  if (!(recording_seconds > 0)) throw ConfigError("recording length must be positive");
  if (!(turn_log_std >= 0) || !(pause_log_std >= 0)) throw ConfigError("log stds must be >= 0");
  if (!(pause_probability >= 0 && pause_probability < 1))
    throw ConfigError("pause probability must lie in [0, 1)");
  if (!(between_class_std >= 0) || !(within_class_std >= 0) || !(offset_std >= 0) ||
      !(session_std >= 0))
    throw ConfigError("standard deviations must be >= 0");
  if (dim < 1) throw ConfigError("dim must be positive");
  window.validate();
}

namespace {

Eigen::MatrixXd draw_gaussian(std::mt19937_64 &rng, Eigen::Index rows, Eigen::Index cols,
                              double std) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Eigen::MatrixXd out(rows, cols);
  for (Eigen::Index i = 0; i < rows; ++i)
    for (Eigen::Index j = 0; j < cols; ++j) out(i, j) = std * normal(rng);
  return out;
}

struct ClassInventory {
  Eigen::RowVectorXd offset;
  Eigen::MatrixXd means;  // n_classes x dim
};

ClassInventory make_inventory(const SynthConfig &c) {
  std::mt19937_64 rng(c.seed);
  ClassInventory inv;
  inv.offset = draw_gaussian(rng, 1, c.dim, c.offset_std).row(0);
  inv.means = draw_gaussian(rng, c.n_classes, c.dim, c.between_class_std);
  return inv;
}

}  // namespace

SynthRecording synth_recording(const SynthConfig &config, int index) {
  config.validate();
  const ClassInventory inv = make_inventory(config);
  std::seed_seq seq{static_cast<std::uint64_t>(config.seed), static_cast<std::uint64_t>(index) + 1};
  std::mt19937_64 rng(seq);

  // Pick this recording's classes.
  std::vector<int> classes(config.n_classes);
  std::iota(classes.begin(), classes.end(), 0);
  if (config.classes_per_recording > 0 && config.classes_per_recording < config.n_classes) {
    std::shuffle(classes.begin(), classes.end(), rng);
    classes.resize(config.classes_per_recording);
    std::sort(classes.begin(), classes.end());
  }

  // Per-recording shift of every class mean (channel, speaker mix).
  Eigen::MatrixXd session = Eigen::MatrixXd::Zero(config.n_classes, config.dim);
  if (config.session_std > 0) session = draw_gaussian(rng, config.n_classes, config.dim, config.session_std);

  char rec_buf[32];
  std::snprintf(rec_buf, sizeof(rec_buf), "rec%03d", index);
  const std::string rec = rec_buf;
  const Millis total = seconds_to_millis(config.recording_seconds);

  std::lognormal_distribution<double> turn_len(config.turn_log_mean, config.turn_log_std);
  std::lognormal_distribution<double> pause_len(config.pause_log_mean, config.pause_log_std);
  std::bernoulli_distribution pause(config.pause_probability);
  std::uniform_int_distribution<std::size_t> pick(0, classes.size() - 1);

  struct Turn {
    Segment segment;
    int cls;
  };
  std::vector<Turn> turns;
  Millis t = 0;
  int prev = -1;
  while (t < total) {
    if (!turns.empty() && pause(rng)) t += std::max<Millis>(1, seconds_to_millis(pause_len(rng)));
    if (t >= total) break;
    const Millis len = std::max<Millis>(1, seconds_to_millis(turn_len(rng)));
    int cls = classes[pick(rng)];
    if (classes.size() > 1) {
      while (cls == prev) cls = classes[pick(rng)];
    }
    const Millis end = std::min(total, t + len);
    turns.push_back({Segment::from_bounds(t, end), cls});
    prev = cls;
    t = end;
  }

  SynthRecording out;
  out.reference = Annotation(rec);
  for (const auto &turn : turns) {
    out.reference.add(turn.segment, config.label_prefix + std::to_string(turn.cls));
    if (!out.speech.empty() && out.speech.back().end() == turn.segment.onset()) {
      out.speech.back() = Segment::from_bounds(out.speech.back().onset(), turn.segment.end());
    } else {
      out.speech.push_back(turn.segment);
    }
  }

  const auto windows = make_windows(out.speech, config.window);
  RowMatrixF rows(windows.size(), config.dim);
  std::vector<RowMeta> meta;
  meta.reserve(windows.size());
  std::size_t first_turn = 0;
  for (std::size_t w = 0; w < windows.size(); ++w) {
    while (first_turn < turns.size() && turns[first_turn].segment.end() <= windows[w].onset())
      ++first_turn;
    // Majority class by covered duration, lowest class id on ties.
    std::map<int, Millis> covered;
    for (std::size_t k = first_turn; k < turns.size() && turns[k].segment.onset() < windows[w].end();
         ++k) {
      covered[turns[k].cls] += overlap(turns[k].segment, windows[w]);
    }
    int cls = covered.begin()->first;
    Millis best = -1;
    for (const auto &[c, d] : covered) {
      if (d > best) {
        best = d;
        cls = c;
      }
    }
    const Eigen::RowVectorXd noise = draw_gaussian(rng, 1, config.dim, config.within_class_std).row(0);
    rows.row(w) = (inv.offset + inv.means.row(cls) + session.row(cls) + noise).cast<float>();
    meta.push_back({rec, windows[w], 0, config.label_prefix + std::to_string(cls)});
  }
  out.embeddings = EmbeddingSet(std::move(rows), std::move(meta));
  return out;
}

std::vector<SynthRecording> synth_corpus(const SynthConfig &config) {
  std::vector<SynthRecording> out;
  for (int i = 0; i < config.n_recordings; ++i) {
    out.push_back(synth_recording(config, config.first_recording + i));
  }
  return out;
}

EmbeddingSet synth_labeled_set(int n_classes, int per_class, double between_std,
                               double within_std, int dim, std::uint64_t seed) {
  if (n_classes < 1 || per_class < 1 || dim < 1) throw ConfigError("invalid labeled-set shape");
  std::mt19937_64 rng(seed);
  const Eigen::MatrixXd means = draw_gaussian(rng, n_classes, dim, between_std);
  RowMatrixF rows(static_cast<Eigen::Index>(n_classes) * per_class, dim);
  std::vector<RowMeta> meta;
  meta.reserve(rows.rows());
  Eigen::Index r = 0;
  for (int c = 0; c < n_classes; ++c) {
    for (int k = 0; k < per_class; ++k, ++r) {
      rows.row(r) = (means.row(c) + draw_gaussian(rng, 1, dim, within_std).row(0)).cast<float>();
      meta.push_back({"train", Segment(r * 1000, 1000), 0, "class" + std::to_string(c)});
    }
  }
  return EmbeddingSet(std::move(rows), std::move(meta));
}

Eigen::MatrixXd synth_labeled_means(int n_classes, double between_std, int dim,
                                    std::uint64_t seed) {
  if (n_classes < 1 || dim < 1) throw ConfigError("invalid labeled-set shape");
  std::mt19937_64 rng(seed);
  return draw_gaussian(rng, n_classes, dim, between_std);
}

EmbeddingSet concatenate(std::span<const EmbeddingSet> sets) {
  if (sets.empty()) return EmbeddingSet();
  const int dim = sets.front().dim();
  Eigen::Index n = 0;
  for (const auto &s : sets) {
    if (s.dim() != dim && s.size() > 0) throw DataError("cannot concatenate sets of different dim");
    n += static_cast<Eigen::Index>(s.size());
  }
  RowMatrixF rows(n, dim);
  std::vector<RowMeta> meta;
  Eigen::Index r = 0;
  for (const auto &s : sets) {
    if (s.size() == 0) continue;
    rows.middleRows(r, s.rows().rows()) = s.rows();
    r += s.rows().rows();
    meta.insert(meta.end(), s.meta().begin(), s.meta().end());
  }
  return EmbeddingSet(std::move(rows), std::move(meta));
}

}  // namespace diarkit
