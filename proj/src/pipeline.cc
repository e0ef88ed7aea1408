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

#include "diarkit/pipeline.h"

#include "diarkit/ensemble.h"

#include <atomic>
#include <bit>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <exception>
#include <filesystem>
#include <mutex>
#include <thread>

#include <openssl/evp.h>

namespace diarkit {

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("SHA-256 computation failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof(buf), "%02x", digest[i]);
    hex += buf;
  }
  return hex;
}

int worker_threads(int cap) {
  int n = 1;
  if (const char *env = std::getenv("DIARKIT_THREADS")) {
    char *end = nullptr;
    const long v = std::strtol(env, &end, 10);
    if (end == env || *end != '\0' || v < 1) throw ConfigError("DIARKIT_THREADS must be a positive integer");
    n = static_cast<int>(v);
  }
  return std::max(1, std::min(n, cap));
}

namespace {

const char *track_name(Track t) { return t == Track::kSpeaker ? "speaker" : "language"; }
const char *backend_name(BackendKind b) { return b == BackendKind::kCosine ? "cosine" : "plda"; }

}  // namespace

void PipelineConfig::validate() const {
  window.validate();
  ahc.validate();
  if (vbx) vbx->validate();
  if (track == Track::kLanguage && backend != BackendKind::kPlda)
    throw ConfigError("the language track requires the plda backend");
  if (vbx && backend != BackendKind::kPlda) throw ConfigError("VBx requires the plda backend");
  if (lda_dim < 1) throw ConfigError("lda_dim must be positive");
  if (threads < 1) throw ConfigError("threads must be >= 1");
  if (!ensemble_weights.empty()) (void)normalize_weights(ensemble_weights);
}

nlohmann::json PipelineConfig::to_json() const {
  nlohmann::json j = {
      {"track", track_name(track)},
      {"window",
       {{"length_ms", window.window_length},
        {"shift_ms", window.shift},
        {"min_window_ms", window.min_window}}},
      {"backend", {{"kind", backend_name(backend)}, {"lda_dim", lda_dim}}},
      {"ahc", {{"threshold", ahc.threshold}, {"min_clusters", ahc.min_clusters}}},
      {"seed", seed},
  };
  j["ahc"]["max_clusters"] = ahc.max_clusters ? nlohmann::json(*ahc.max_clusters) : nlohmann::json();
  if (vbx) {
    j["vbx"] = {{"p_loop", vbx->p_loop},     {"fa", vbx->fa},
                {"fb", vbx->fb},             {"max_iters", vbx->max_iters},
                {"elbo_tol", vbx->elbo_tol}, {"drop_prior", vbx->drop_prior}};
  } else {
    j["vbx"] = nullptr;
  }
  j["ensemble_weights"] = ensemble_weights;
  return j;
}

PipelineConfig default_config(Track track) {
  PipelineConfig c;
  c.track = track;
  if (track == Track::kSpeaker) {
    c.window = {10000, 1000, 1000};
    c.backend = BackendKind::kCosine;
    c.ahc.threshold = 0.5;
    c.vbx.reset();
  }
  return c;
}

std::map<std::string, nlohmann::json> parse_toml(std::string_view text) {
  std::map<std::string, nlohmann::json> out;
  std::string table;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t nl = text.find('\n', pos);
    if (nl == std::string_view::npos) nl = text.size();
    std::string line(text.substr(pos, nl - pos));
    pos = nl + 1;
    ++line_no;
    // Strip comments outside of strings.
    bool in_string = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
      if (line[i] == '"' && (i == 0 || line[i - 1] != '\\')) in_string = !in_string;
      if (line[i] == '#' && !in_string) {
        line.resize(i);
        break;
      }
    }
    auto trim = [](std::string s) {
      const auto b = s.find_first_not_of(" \t\r");
      if (b == std::string::npos) return std::string();
      const auto e = s.find_last_not_of(" \t\r");
      return s.substr(b, e - b + 1);
    };
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']') throw ParseError(line_no, "unterminated table header");
      table = trim(line.substr(1, line.size() - 2));
      if (table.empty()) throw ParseError(line_no, "empty table name");
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ParseError(line_no, "expected key = value");
    const std::string key = trim(line.substr(0, eq));
    const std::string value = trim(line.substr(eq + 1));
    if (key.empty() || value.empty()) throw ParseError(line_no, "expected key = value");
    nlohmann::json parsed;
    try {
      parsed = nlohmann::json::parse(value);
    } catch (const nlohmann::json::exception &) {
      throw ParseError(line_no, "unsupported value '" + value + "'");
    }
    const std::string full = table.empty() ? key : table + "." + key;
    if (!out.emplace(full, std::move(parsed)).second) throw ParseError(line_no, "duplicate key '" + full + "'");
  }
  return out;
}

PipelineConfig parse_pipeline_config(std::string_view text) {
  std::map<std::string, nlohmann::json> kv;
  try {
    kv = parse_toml(text);
  } catch (const ParseError &e) {
    throw ConfigError(std::string("config ") + e.what());
  }
  auto take = [&](const std::string &key) -> std::optional<nlohmann::json> {
    auto it = kv.find(key);
    if (it == kv.end()) return std::nullopt;
    auto v = it->second;
    kv.erase(it);
    return v;
  };
  try {
    Track track = Track::kLanguage;
    if (auto v = take("track")) {
      const auto name = v->get<std::string>();
      if (name == "speaker") {
        track = Track::kSpeaker;
      } else if (name != "language") {
        throw ConfigError("track must be 'speaker' or 'language'");
      }
    }
    PipelineConfig c = default_config(track);
    if (auto v = take("seed")) c.seed = v->get<std::uint64_t>();
    if (auto v = take("threads")) c.threads = v->get<int>();
    if (auto v = take("window.length")) c.window.window_length = seconds_to_millis(v->get<double>());
    if (auto v = take("window.shift")) c.window.shift = seconds_to_millis(v->get<double>());
    if (auto v = take("window.min_window")) c.window.min_window = seconds_to_millis(v->get<double>());
    if (auto v = take("backend.kind")) {
      const auto name = v->get<std::string>();
      if (name == "cosine") {
        c.backend = BackendKind::kCosine;
      } else if (name == "plda") {
        c.backend = BackendKind::kPlda;
      } else {
        throw ConfigError("backend.kind must be 'cosine' or 'plda'");
      }
    }
    if (auto v = take("backend.lda_dim")) c.lda_dim = v->get<int>();
    if (auto v = take("ahc.threshold")) c.ahc.threshold = v->get<double>();
    if (auto v = take("ahc.min_clusters")) c.ahc.min_clusters = v->get<int>();
    if (auto v = take("ahc.max_clusters")) {
      if (v->is_null() || (v->is_number() && v->get<int>() <= 0)) {
        c.ahc.max_clusters.reset();
      } else {
        c.ahc.max_clusters = v->get<int>();
      }
    }
    VbxConfig vbx = c.vbx.value_or(VbxConfig{});
    bool vbx_enabled = c.vbx.has_value();
    if (auto v = take("vbx.enabled")) vbx_enabled = v->get<bool>();
    if (auto v = take("vbx.p_loop")) vbx.p_loop = v->get<double>();
    if (auto v = take("vbx.fa")) vbx.fa = v->get<double>();
    if (auto v = take("vbx.fb")) vbx.fb = v->get<double>();
    if (auto v = take("vbx.max_iters")) vbx.max_iters = v->get<int>();
    if (auto v = take("vbx.elbo_tol")) vbx.elbo_tol = v->get<double>();
    if (auto v = take("vbx.drop_prior")) vbx.drop_prior = v->get<double>();
    c.vbx = vbx_enabled ? std::optional<VbxConfig>(vbx) : std::nullopt;
    if (auto v = take("ensemble.weights")) c.ensemble_weights = v->get<std::vector<double>>();
    if (!kv.empty()) throw ConfigError("unknown config key '" + kv.begin()->first + "'");
    c.validate();
    return c;
  } catch (const nlohmann::json::exception &e) {
    throw ConfigError(std::string("config value has the wrong type: ") + e.what());
  }
}

SpeechMap speech_from_uems(const std::vector<Uem> &uems) {
  SpeechMap out;
  for (const auto &u : uems) out[u.recording_id()] = u.regions();
  return out;
}

std::vector<Uem> speech_to_uems(const SpeechMap &speech) {
  std::vector<Uem> out;
  for (const auto &[rec, segs] : speech) out.emplace_back(rec, segs);
  return out;
}

nlohmann::json RunManifest::to_json() const {
  return {{"tool", "diarkit"},
          {"tool_version", tool_version},
          {"config_sha256", config_sha256},
          {"inputs", input_digests},
          {"outputs", output_digests},
          {"timings_ms", timings_ms}};
}

RunManifest RunManifest::from_json(const nlohmann::json &j) {
  RunManifest m;
  try {
    m.tool_version = j.at("tool_version").get<std::string>();
    m.config_sha256 = j.at("config_sha256").get<std::string>();
    m.input_digests = j.at("inputs").get<std::map<std::string, std::string>>();
    m.output_digests = j.at("outputs").get<std::map<std::string, std::string>>();
    m.timings_ms = j.value("timings_ms", std::map<std::string, double>{});
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid manifest: ") + e.what());
  }
  return m;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string model_digest(const PldaModel &m) {
  std::string bytes;
  auto add = [&](const Eigen::MatrixXd &a) {
    const std::int64_t shape[2] = {a.rows(), a.cols()};
    bytes.append(reinterpret_cast<const char *>(shape), sizeof(shape));
    for (Eigen::Index i = 0; i < a.rows(); ++i)
      for (Eigen::Index j = 0; j < a.cols(); ++j) {
        const double v = a(i, j);
        bytes.append(reinterpret_cast<const char *>(&v), sizeof(v));
      }
  };
  add(m.mu);
  add(m.lda_basis);
  add(m.plda_mean);
  add(m.between);
  add(m.within);
  add(m.diag_transform);
  add(m.phi);
  bytes.push_back(m.length_norm ? 1 : 0);
  return sha256_hex(bytes);
}

std::string describe(const Segment &s) {
  return "[" + format_millis(s.onset()) + ", " + format_millis(s.end()) + "]";
}

std::vector<std::string> label_names(const std::vector<int> &labels, Track track) {
  const std::string prefix = track == Track::kSpeaker ? "spk" : "lang";
  std::vector<std::string> out;
  char buf[32];
  for (int l : labels) {
    std::snprintf(buf, sizeof(buf), "%s%02d", prefix.c_str(), l);
    out.emplace_back(buf);
  }
  return out;
}

struct StageTimes {
  std::mutex mu;
  std::map<std::string, double> ms;
  void add(const std::string &stage, Clock::time_point start) {
    const double d = std::chrono::duration<double, std::milli>(Clock::now() - start).count();
    std::lock_guard<std::mutex> lock(mu);
    ms[stage] += d;
  }
};

RecordingResult process_recording(const PipelineConfig &config, const std::string &rec,
                                   const std::vector<Segment> &speech,
                                   const EmbeddingSet &embeddings, const std::optional<PldaModel> &model,
                                   StageTimes &times) {
  RecordingResult r;
  r.recording_id = rec;

  auto t0 = Clock::now();
  r.windows = make_windows(speech, config.window);
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < embeddings.size(); ++i) {
    const auto &m = embeddings.meta()[i];
    if (m.recording_id == rec && m.stream == 0) rows.push_back(i);
  }
  const std::size_t common = std::min(rows.size(), r.windows.size());
  for (std::size_t k = 0; k < common; ++k) {
    const Segment &have = embeddings.meta()[rows[k]].window;
    if (have != r.windows[k])
      throw DataError(rec + ": embedding row " + std::to_string(k) + " has window " +
                      describe(have) + " but the window plan gives " + describe(r.windows[k]));
  }
  if (rows.size() != r.windows.size()) {
    const std::string first = rows.size() < r.windows.size()
                                  ? "missing embedding for window " + describe(r.windows[common])
                                  : "extra embedding row with window " +
                                        describe(embeddings.meta()[rows[common]].window);
    throw DataError(rec + ": " + std::to_string(rows.size()) + " embedding rows for " +
                    std::to_string(r.windows.size()) + " windows; first mismatch: " + first);
  }
  times.add("windows", t0);

  r.ahc_annotation = Annotation(rec);
  r.final_annotation = Annotation(rec);
  if (r.windows.empty()) return r;

  t0 = Clock::now();
  const Eigen::MatrixXd x = embeddings.select(rows).as_double();
  Scorer scorer = CosineBackend{};
  if (config.backend == BackendKind::kPlda) scorer = *model;
  r.similarity = similarity_matrix(scorer, x);
  times.add("similarity", t0);

  t0 = Clock::now();
  r.ahc_labels = ahc(r.similarity, config.ahc);
  r.ahc_annotation = windows_to_annotation(rec, r.windows, label_names(r.ahc_labels, config.track));
  times.add("ahc", t0);

  std::vector<int> final_labels = r.ahc_labels;
  if (config.vbx) {
    t0 = Clock::now();
    const Eigen::MatrixXd diag = model->diagonalize_rows(x);
    r.vbx = vbx_refine(diag, model->phi, r.ahc_labels, *config.vbx);
    final_labels = r.vbx->labels;
    times.add("vbx", t0);
  }
  r.final_annotation = windows_to_annotation(rec, r.windows, label_names(final_labels, config.track));
  return r;
}

void put_f32(std::string &out, double v) {
  const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v));
  for (int b = 0; b < 4; ++b) out.push_back(static_cast<char>((bits >> (8 * b)) & 0xFF));
}

}  // namespace

PipelineOutput run_pipeline(const PipelineConfig &config, const SpeechMap &speech,
                            const EmbeddingSet &embeddings, const std::optional<PldaModel> &model,
                            const std::optional<std::string> &run_dir) {
  config.validate();
  if ((config.backend == BackendKind::kPlda || config.vbx) && !model)
    throw ConfigError("this configuration needs a PLDA model");
  if (model && config.backend == BackendKind::kPlda && embeddings.size() > 0 &&
      model->input_dim() != embeddings.dim())
    throw DataError("model expects dim " + std::to_string(model->input_dim()) +
                    " but embeddings have dim " + std::to_string(embeddings.dim()));
  for (const auto &rec : embeddings.recording_ids()) {
    if (!speech.count(rec)) throw DataError("embeddings for recording '" + rec + "' have no VAD segments");
  }

  PipelineOutput out;
  if (model) out.warnings = model->warnings;
  StageTimes times;
  std::vector<std::string> recs;
  for (const auto &[rec, _] : speech) recs.push_back(rec);
  std::vector<RecordingResult> results(recs.size());
  std::vector<std::exception_ptr> errors(recs.size());

  const int threads = std::min<int>(config.threads, worker_threads(std::max<int>(1, recs.size())));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t i = next++; i < recs.size(); i = next++) {
      try {
        results[i] = process_recording(config, recs[i], speech.at(recs[i]), embeddings, model, times);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto &t : pool) t.join();
  }
  for (auto &e : errors) {
    if (e) std::rethrow_exception(e);
  }

  for (const auto &r : results) out.final_annotations.push_back(r.final_annotation);

  // Stage artifacts.
  nlohmann::json windows_json = {{"recordings", nlohmann::json::array()}};
  std::string sim_blob;
  std::vector<Annotation> ahc_rttm, vbx_rttm;
  for (const auto &r : results) {
    nlohmann::json wins = nlohmann::json::array();
    for (const auto &w : r.windows) wins.push_back({w.onset(), w.end()});
    windows_json["recordings"].push_back({{"recording_id", r.recording_id},
                                          {"windows_ms", wins},
                                          {"sim_offset", sim_blob.size() / 4},
                                          {"n", r.similarity.n()}});
    for (Eigen::Index i = 0; i < r.similarity.n(); ++i)
      for (Eigen::Index j = 0; j < r.similarity.n(); ++j) put_f32(sim_blob, r.similarity.values(i, j));
    ahc_rttm.push_back(r.ahc_annotation);
    if (config.vbx) vbx_rttm.push_back(r.final_annotation);
  }
  std::map<std::string, std::string> artifacts;
  artifacts["windows.json"] = windows_json.dump(1) + "\n";
  artifacts["sim.f32"] = sim_blob;
  artifacts["ahc.rttm"] = rttm_write(ahc_rttm);
  if (config.vbx) artifacts["vbx.rttm"] = rttm_write(vbx_rttm);
  artifacts["final.rttm"] = rttm_write(out.final_annotations);

  RunManifest &m = out.manifest;
  m.config_sha256 = sha256_hex(config.to_json().dump());
  m.input_digests["vad"] = sha256_hex(uem_write(speech_to_uems(speech)));
  m.input_digests["embeddings"] = sha256_hex(emb_serialize(embeddings));
  if (model) m.input_digests["model"] = model_digest(*model);
  for (const auto &[name, bytes] : artifacts) m.output_digests[name] = sha256_hex(bytes);
  m.timings_ms = times.ms;

  if (run_dir) {
    std::filesystem::create_directories(*run_dir);
    for (const auto &[name, bytes] : artifacts) {
      write_text_file((std::filesystem::path(*run_dir) / name).string(), bytes);
    }
    write_text_file((std::filesystem::path(*run_dir) / "manifest.json").string(),
                    m.to_json().dump(2) + "\n");
  }
  out.recordings = std::move(results);
  return out;
}

std::vector<std::string> verify_manifest(const std::string &run_dir) {
  namespace fs = std::filesystem;
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(read_text_file((fs::path(run_dir) / "manifest.json").string()));
  } catch (const nlohmann::json::exception &e) {
    throw DataError(std::string("invalid manifest: ") + e.what());
  }
  const RunManifest m = RunManifest::from_json(j);
  std::vector<std::string> bad;
  for (const auto &[name, digest] : m.output_digests) {
    const fs::path p = fs::path(run_dir) / name;
    if (!fs::exists(p) || sha256_hex(read_text_file(p.string())) != digest) bad.push_back(name);
  }
  return bad;
}

}  // namespace diarkit
