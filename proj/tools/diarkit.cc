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

// diarkit command-line front end.

#include <cstdio>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "diarkit/backend.h"
#include "diarkit/clustering.h"
#include "diarkit/embedstore.h"
#include "diarkit/ensemble.h"
#include "diarkit/losses.h"
#include "diarkit/metrics.h"
#include "diarkit/pipeline.h"
#include "diarkit/timeline.h"
#include "diarkit/windowing.h"

namespace {

using namespace diarkit;
using nlohmann::json;

constexpr int kExitConfig = 2;
constexpr int kExitData = 3;

void emit(const std::string &text, const std::string &out_path) {
  if (out_path.empty() || out_path == "-") {
    std::cout << text;
  } else {
    write_text_file(out_path, text);
  }
}

// Window plan options shared by several subcommands, in seconds.
struct WindowOpts {
  double length = 5.0;
  double shift = 1.0;
  double min_window = 1.0;

  CLI::Option *length_opt = nullptr;
  CLI::Option *shift_opt = nullptr;
  CLI::Option *min_opt = nullptr;

  // With track_defaults the help omits the 5 s / 1 s values, since unset
  // flags fall back to the track's plan.
  void add_to(CLI::App *app, bool track_defaults = false) {
    const std::string suffix = track_defaults ? "; track default if unset" : "";
    length_opt = app->add_option("--win", length, "window length (s)" + suffix);
    shift_opt = app->add_option("--shift", shift, "window shift (s)" + suffix);
    min_opt = app->add_option("--min-window", min_window, "shortest window kept (s)" + suffix);
    if (!track_defaults) {
      length_opt->capture_default_str();
      shift_opt->capture_default_str();
      min_opt->capture_default_str();
    }
  }
  WindowPlan plan() const {
    WindowPlan p{seconds_to_millis(length), seconds_to_millis(shift), seconds_to_millis(min_window)};
    p.validate();
    return p;
  }
  // Track defaults, overridden only by flags actually given.
  WindowPlan plan_over(WindowPlan base) const {
    if (length_opt && length_opt->count() > 0) base.window_length = seconds_to_millis(length);
    if (shift_opt && shift_opt->count() > 0) base.shift = seconds_to_millis(shift);
    if (min_opt && min_opt->count() > 0) base.min_window = seconds_to_millis(min_window);
    base.validate();
    return base;
  }
};

// ---- synth

struct SynthOpts {
  SynthConfig cfg;
  WindowOpts win;
  std::string prefix;
};

void run_synth(const SynthOpts &o) {
  SynthConfig cfg = o.cfg;
  cfg.window = o.win.plan();
  const auto corpus = synth_corpus(cfg);
  std::vector<EmbeddingSet> sets;
  std::vector<Annotation> refs;
  std::vector<Uem> vad;
  for (const auto &r : corpus) {
    sets.push_back(r.embeddings);
    refs.push_back(r.reference);
    vad.emplace_back(r.reference.recording_id(), r.speech);
  }
  emb_write(concatenate(sets), o.prefix + ".dkeb");
  rttm_write_file(o.prefix + ".rttm", refs);
  write_text_file(o.prefix + ".uem", uem_write(vad));
  std::size_t rows = 0;
  for (const auto &s : sets) rows += s.size();
  std::cout << json{{"recordings", corpus.size()},
                    {"rows", rows},
                    {"dim", cfg.dim},
                    {"embeddings", o.prefix + ".dkeb"},
                    {"reference", o.prefix + ".rttm"},
                    {"vad", o.prefix + ".uem"}}
                   .dump(2)
            << "\n";
}

// ---- windows

void run_windows(const std::string &vad_path, const WindowOpts &win, const std::string &out) {
  const WindowPlan plan = win.plan();
  json j = {{"recordings", json::array()}};
  for (const auto &u : uem_read_file(vad_path)) {
    const auto windows = make_windows(u.regions(), plan);
    json list = json::array();
    for (const auto &w : windows) list.push_back({w.onset_seconds(), w.end_seconds()});
    j["recordings"].push_back({{"recording_id", u.recording_id()}, {"count", windows.size()}, {"windows", list}});
  }
  emit(j.dump(1) + "\n", out);
}

// ---- train-backend / score-pairs

void run_train_backend(const std::string &emb_path, int lda_dim, const std::string &out) {
  const EmbeddingSet set = emb_read(emb_path);
  const auto labels = set.true_labels();
  const PldaModel model = train_backend(set.as_double(), labels, lda_dim);
  for (const auto &w : model.warnings) log_warning(w);
  save_plda(model, out);
  std::cout << json{{"model", out},
                    {"input_dim", model.input_dim()},
                    {"lda_dim", model.lda_dim()},
                    {"plda_dim", model.plda_dim()},
                    {"warnings", model.warnings}}
                   .dump(2)
            << "\n";
}

void run_score_pairs(const std::string &model_path, const std::string &emb_path,
                     const std::string &pairs_path, const std::string &out) {
  const EmbeddingSet set = emb_read(emb_path);
  Scorer scorer = CosineBackend{};
  if (!model_path.empty()) scorer = load_plda(model_path);
  const Eigen::MatrixXd x = set.as_double();
  std::vector<std::pair<Eigen::Index, Eigen::Index>> pairs;
  if (pairs_path.empty()) {
    for (Eigen::Index i = 0; i < x.rows(); ++i)
      for (Eigen::Index j = i + 1; j < x.rows(); ++j) pairs.emplace_back(i, j);
  } else {
    std::istringstream in(read_text_file(pairs_path));
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
      ++line_no;
      std::istringstream ls(line);
      long long i = 0, j = 0;
      if (!(ls >> i)) continue;
      if (!(ls >> j) || i < 0 || j < 0 || i >= x.rows() || j >= x.rows())
        throw ParseError(line_no, "expected two row indices below " + std::to_string(x.rows()));
      pairs.emplace_back(i, j);
    }
  }
  std::string text;
  char buf[96];
  for (const auto &[i, j] : pairs) {
    double s = 0.0;
    if (const auto *m = std::get_if<PldaModel>(&scorer)) {
      s = plda_llr(*m, x.row(i).transpose(), x.row(j).transpose());
    } else {
      s = cosine_similarity(x.row(i).transpose(), x.row(j).transpose());
    }
    std::snprintf(buf, sizeof(buf), "%lld %lld %.6f\n", static_cast<long long>(i),
                  static_cast<long long>(j), s);
    text += buf;
  }
  emit(text, out);
}

// ---- cluster / vbx / run

struct ClusterOpts {
  std::string config_path;
  std::string track = "language";
  std::string backend;
  std::string emb_path, vad_path, model_path, out, run_dir;
  WindowOpts win;
  std::optional<double> threshold;
  int min_clusters = 1;
  int max_clusters = 0;
  int lda_dim = kCanonicalLdaDim;
  VbxConfig vbx;
  std::uint64_t seed = 0;
  int threads = 1;
  bool verify = false;

  void add_common(CLI::App *app) {
    app->add_option("--config", config_path, "TOML config file; overrides the flags below");
    app->add_option("--track", track, "speaker or language")->check(CLI::IsMember({"speaker", "language"}));
    app->add_option("--backend", backend, "cosine or plda")->check(CLI::IsMember({"cosine", "plda"}));
    app->add_option("--emb", emb_path, "window embeddings (.dkeb)");
    app->add_option("--vad", vad_path, "speech segments (UEM syntax)");
    app->add_option("--model", model_path, "PLDA model from train-backend");
    app->add_option("-o,--out", out, "output RTTM (default stdout)");
    app->add_option("--run-dir", run_dir, "directory for stage artifacts and manifest");
    win.add_to(app, true);
    app->add_option("--threshold", threshold, "AHC stopping similarity");
    app->add_option("--min-clusters", min_clusters)->capture_default_str();
    app->add_option("--max-clusters", max_clusters, "0 means unconstrained")->capture_default_str();
    app->add_option("--seed", seed)->capture_default_str();
    app->add_option("--threads", threads, "worker cap (DIARKIT_THREADS also applies)")->capture_default_str();
  }
  void add_vbx(CLI::App *app) {
    app->add_option("--p-loop", vbx.p_loop)->capture_default_str();
    app->add_option("--fa", vbx.fa)->capture_default_str();
    app->add_option("--fb", vbx.fb)->capture_default_str();
    app->add_option("--max-iters", vbx.max_iters)->capture_default_str();
    app->add_option("--elbo-tol", vbx.elbo_tol)->capture_default_str();
    app->add_option("--drop-prior", vbx.drop_prior)->capture_default_str();
  }

  // Flag-built config; `use_vbx` picks between the cluster and vbx subcommands.
  PipelineConfig config(std::optional<bool> use_vbx) const {
    PipelineConfig c;
    if (!config_path.empty()) {
      c = parse_pipeline_config(read_text_file(config_path));
    } else {
      c = default_config(track == "speaker" ? Track::kSpeaker : Track::kLanguage);
      c.window = win.plan_over(c.window);
      if (!backend.empty()) c.backend = backend == "cosine" ? BackendKind::kCosine : BackendKind::kPlda;
      if (threshold) c.ahc.threshold = *threshold;
      c.ahc.min_clusters = min_clusters;
      if (max_clusters > 0) c.ahc.max_clusters = max_clusters;
      c.lda_dim = lda_dim;
      if (c.vbx) c.vbx = vbx;
      c.seed = seed;
    }
    if (use_vbx) c.vbx = *use_vbx ? std::optional<VbxConfig>(c.vbx.value_or(vbx)) : std::nullopt;
    c.threads = std::max(c.threads, threads);
    c.validate();
    return c;
  }
};

void require(const std::string &value, const char *flag) {
  if (value.empty()) throw ConfigError(std::string(flag) + " is required");
}

void run_cluster(const ClusterOpts &o, std::optional<bool> use_vbx) {
  if (o.verify) {
    require(o.run_dir, "--run-dir");
    const auto bad = verify_manifest(o.run_dir);
    std::cout << json{{"run_dir", o.run_dir}, {"ok", bad.empty()}, {"mismatched", bad}}.dump(2) << "\n";
    if (!bad.empty()) throw DataError("manifest verification failed for " + std::to_string(bad.size()) + " artifact(s)");
    return;
  }
  require(o.emb_path, "--emb");
  require(o.vad_path, "--vad");
  const PipelineConfig cfg = o.config(use_vbx);
  std::optional<PldaModel> model;
  if (!o.model_path.empty()) model = load_plda(o.model_path);
  const EmbeddingSet emb = emb_read(o.emb_path);
  const SpeechMap speech = speech_from_uems(uem_read_file(o.vad_path));
  std::optional<std::string> run_dir;
  if (!o.run_dir.empty()) run_dir = o.run_dir;
  const auto result = run_pipeline(cfg, speech, emb, model, run_dir);
  for (const auto &w : result.warnings) log_warning(w);
  emit(rttm_write(result.final_annotations), o.out);
}

// ---- ensemble

void run_ensemble_cmd(const std::vector<std::string> &inputs, const std::vector<double> &weights,
                      const std::vector<int> &ranks, const std::string &out) {
  if (inputs.size() < 2) throw ConfigError("ensemble needs at least two RTTM files");
  std::vector<std::vector<Annotation>> systems;
  for (const auto &p : inputs) systems.push_back(rttm_read_file(p));
  std::vector<double> w;
  if (!weights.empty() && !ranks.empty()) throw ConfigError("--weights and --ranks are exclusive");
  if (!weights.empty()) {
    if (weights.size() != inputs.size()) throw ConfigError("one weight per input is required");
    w = normalize_weights(weights);
  } else if (!ranks.empty()) {
    if (ranks.size() != inputs.size()) throw ConfigError("one rank per input is required");
    w = rank_weights(ranks);
  } else {
    w = uniform_weights(inputs.size());
  }
  emit(rttm_write(run_ensemble(systems, w)), out);
}

// ---- score

std::string der_cell(const std::optional<double> &d) {
  if (!d) return "n/a";
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.2f", 100.0 * *d);
  return buf;
}

json components_json(const DerComponents &c) {
  json j = {{"recording_id", c.recording_id},
            {"missed", millis_to_seconds(c.missed)},
            {"false_alarm", millis_to_seconds(c.false_alarm)},
            {"confusion", millis_to_seconds(c.confusion)},
            {"total_ref", millis_to_seconds(c.total_ref)}};
  const auto d = c.der();
  j["der"] = d ? json(*d) : json();
  return j;
}

void run_score(const std::string &ref_path, const std::string &hyp_path, const std::string &uem_path,
               double collar, bool no_overlap, bool ci, int n_bootstrap, std::uint64_t seed,
               const std::string &fmt) {
  const auto refs = rttm_read_file(ref_path);
  const auto hyps = rttm_read_file(hyp_path);
  std::map<std::string, Uem> uems;
  if (!uem_path.empty()) {
    for (auto &u : uem_read_file(uem_path)) uems.emplace(u.recording_id(), u);
  }
  std::map<std::string, Annotation> hyp_by_id;
  for (const auto &h : hyps) hyp_by_id.emplace(h.recording_id(), h);
  std::vector<std::pair<Annotation, Annotation>> pairs;
  for (const auto &r : refs) {
    auto it = hyp_by_id.find(r.recording_id());
    pairs.emplace_back(r, it == hyp_by_id.end() ? Annotation(r.recording_id()) : it->second);
    if (it != hyp_by_id.end()) hyp_by_id.erase(it);
  }
  for (const auto &[id, h] : hyp_by_id) {
    log_warning("hypothesis recording '" + id + "' has no reference; scored as all false alarm");
    pairs.emplace_back(Annotation(id), h);
  }
  DerOptions opts;
  opts.collar = seconds_to_millis(collar);
  opts.score_overlap = !no_overlap;
  const DerReport rep = der_corpus(pairs, uems, opts);

  json j = {{"total", components_json(rep.totals)}, {"per_recording", json::array()}};
  for (const auto &c : rep.per_recording) j["per_recording"].push_back(components_json(c));
  j["collar"] = collar;
  j["score_overlap"] = opts.score_overlap;
  std::optional<CiReport> ci_rep;
  if (ci) {
    ci_rep = bootstrap_ci(rep.per_recording, n_bootstrap, seed, 0.95, worker_threads(64));
    j["ci"] = {{"point", ci_rep->point}, {"low", ci_rep->low}, {"high", ci_rep->high},
               {"n_bootstrap", ci_rep->n_bootstrap}, {"seed", ci_rep->seed}, {"level", ci_rep->level},
               {"formatted", format_ci(*ci_rep)}};
  }
  if (fmt == "json" || fmt == "both") std::cout << j.dump(2) << "\n";
  if (fmt == "table" || fmt == "both") {
    char buf[256];
    std::snprintf(buf, sizeof(buf), "%-24s %10s %10s %10s %10s %8s\n", "recording", "ref(s)", "miss(s)",
                  "fa(s)", "conf(s)", "DER%");
    std::cout << buf;
    auto row = [&](const DerComponents &c, const std::string &name) {
      std::snprintf(buf, sizeof(buf), "%-24s %10.3f %10.3f %10.3f %10.3f %8s\n", name.c_str(),
                    millis_to_seconds(c.total_ref), millis_to_seconds(c.missed),
                    millis_to_seconds(c.false_alarm), millis_to_seconds(c.confusion), der_cell(c.der()).c_str());
      std::cout << buf;
    };
    for (const auto &c : rep.per_recording) row(c, c.recording_id);
    row(rep.totals, "*** OVERALL ***");
    if (ci_rep) std::cout << "DER% (95% CI): " << format_ci(*ci_rep) << "\n";
  }
}

// ---- loss

Eigen::MatrixXd read_matrix(const std::string &path) { return emb_read(path).as_double(); }

json perm_json(const PermutedLoss &r) { return {{"loss", r.loss}, {"permutation", r.permutation}}; }

json mixit_json(const MixitResult &r, MixitLossKind kind) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < r.assignment.rows(); ++i) {
    std::vector<int> row(r.assignment.cols());
    for (Eigen::Index j = 0; j < r.assignment.cols(); ++j) row[j] = r.assignment(i, j);
    rows.push_back(row);
  }
  return {{"loss", r.loss}, {"kind", to_string(kind)}, {"assignment", rows}};
}

struct LossOpts {
  std::string pred, ref, mixtures, sources, kind = "neg_snr";
  int k_max = 3, max_overlap = 2;
  double lambda = kCanonicalPixitLambda;
};

void run_loss(const std::string &which, const LossOpts &o) {
  json j = {{"loss_type", which}};
  auto need = [](const std::string &v, const char *flag) { require(v, flag); };
  if (which == "pit" || which == "pixit") {
    need(o.pred, "--pred");
    need(o.ref, "--ref");
  }
  if (which == "mixit" || which == "pixit") {
    need(o.mixtures, "--mixtures");
    need(o.sources, "--sources");
  }
  if (which == "pit") {
    j.update(perm_json(pit_loss(read_matrix(o.pred), read_matrix(o.ref))));
  } else if (which == "powerset") {
    need(o.pred, "--pred");
    need(o.ref, "--ref");
    const PowersetSpace space(o.k_max, o.max_overlap);
    j.update(perm_json(powerset_ce(read_matrix(o.pred), read_matrix(o.ref), space)));
    j["num_classes"] = space.num_classes();
  } else {
    const MixitLossKind kind = parse_mixit_kind(o.kind);
    MixtureOfMixtures mom{read_matrix(o.mixtures), read_matrix(o.sources)};
    const MixitResult mr = mixit_loss(mom, kind);
    if (which == "mixit") {
      j.update(mixit_json(mr, kind));
    } else {
      PixitWeights pw{o.lambda};
      pw.validate();
      const PermutedLoss pit = pit_loss(read_matrix(o.pred), read_matrix(o.ref));
      j["pit"] = perm_json(pit);
      j["mixit"] = mixit_json(mr, kind);
      j["lambda"] = o.lambda;
      j["loss"] = pixit_loss(pit.loss, mr.loss, o.lambda);
    }
  }
  std::cout << j.dump(2) << "\n";
}

}  // namespace

int main(int argc, char **argv) {
  CLI::App app{"diarkit: diarization clustering, ensembling and scoring toolkit"};
  app.set_version_flag("--version", std::string(kToolVersion));
  app.require_subcommand(1);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "print progress messages");

  SynthOpts synth;
  auto *c_synth = app.add_subcommand("synth", "write a synthetic corpus: .dkeb, reference RTTM, VAD (UEM syntax)");
  c_synth->add_option("-o,--out", synth.prefix, "output path prefix")->required();
  c_synth->add_option("--recordings", synth.cfg.n_recordings)->capture_default_str();
  c_synth->add_option("--first-recording", synth.cfg.first_recording)->capture_default_str();
  c_synth->add_option("--classes", synth.cfg.n_classes)->capture_default_str();
  c_synth->add_option("--classes-per-recording", synth.cfg.classes_per_recording, "0 = all")->capture_default_str();
  c_synth->add_option("--seconds", synth.cfg.recording_seconds)->capture_default_str();
  c_synth->add_option("--dim", synth.cfg.dim)->capture_default_str();
  c_synth->add_option("--between-std", synth.cfg.between_class_std)->capture_default_str();
  c_synth->add_option("--within-std", synth.cfg.within_class_std)->capture_default_str();
  c_synth->add_option("--session-std", synth.cfg.session_std, "per-recording shift of class means")
      ->capture_default_str();
  c_synth->add_option("--label-prefix", synth.cfg.label_prefix)->capture_default_str();
  c_synth->add_option("--seed", synth.cfg.seed)->capture_default_str();
  synth.win.add_to(c_synth);

  std::string win_vad, win_out;
  WindowOpts win_opts;
  auto *c_windows = app.add_subcommand("windows", "list the windows derived from speech segments");
  c_windows->add_option("--vad", win_vad, "speech segments (UEM syntax)")->required();
  c_windows->add_option("-o,--out", win_out, "output JSON (default stdout)");
  win_opts.add_to(c_windows);

  std::string tb_emb, tb_out;
  int tb_lda = kCanonicalLdaDim;
  auto *c_train = app.add_subcommand("train-backend", "train LDA + length norm + PLDA from labeled embeddings");
  c_train->add_option("--emb", tb_emb, "labeled embeddings (.dkeb with labels)")->required();
  c_train->add_option("--lda-dim", tb_lda)->capture_default_str();
  c_train->add_option("-o,--out", tb_out, "model JSON path (sidecar .bin written next to it)")->required();

  std::string sp_model, sp_emb, sp_pairs, sp_out;
  auto *c_pairs = app.add_subcommand("score-pairs", "score embedding pairs (PLDA LLR, or cosine without --model)");
  c_pairs->add_option("--model", sp_model);
  c_pairs->add_option("--emb", sp_emb)->required();
  c_pairs->add_option("--pairs", sp_pairs, "file of 'i j' row index pairs (default: all i<j)");
  c_pairs->add_option("-o,--out", sp_out);

  ClusterOpts cl, vb, rn;
  auto *c_cluster = app.add_subcommand("cluster", "AHC over window embeddings, RTTM out");
  cl.add_common(c_cluster);
  c_cluster->add_option("--lda-dim", cl.lda_dim)->capture_default_str();
  auto *c_vbx = app.add_subcommand("vbx", "AHC then VBx refinement, RTTM out");
  vb.add_common(c_vbx);
  vb.add_vbx(c_vbx);
  auto *c_run = app.add_subcommand("run", "full pipeline from a config file, with stage artifacts");
  rn.add_common(c_run);
  rn.add_vbx(c_run);
  c_run->add_flag("--verify", rn.verify, "check the digests in <run-dir>/manifest.json and exit");

  std::vector<std::string> ens_inputs;
  std::vector<double> ens_weights;
  std::vector<int> ens_ranks;
  std::string ens_out;
  auto *c_ens = app.add_subcommand("ensemble", "DOVER-Lap combination of RTTM hypotheses");
  c_ens->add_option("inputs", ens_inputs, "hypothesis RTTM files")->required();
  c_ens->add_option("--weights", ens_weights, "one weight per input")->delimiter(',');
  c_ens->add_option("--ranks", ens_ranks, "1-based ranks, weights 1/rank")->delimiter(',');
  c_ens->add_option("-o,--out", ens_out);

  std::string sc_ref, sc_hyp, sc_uem, sc_format = "both";
  double sc_collar = 0.0;
  bool sc_ci = false, sc_no_overlap = false;
  int sc_nboot = 1000;
  std::uint64_t sc_seed = 42;
  auto *c_score = app.add_subcommand("score", "diarization error rate with optional bootstrap CI");
  c_score->add_option("--ref", sc_ref)->required();
  c_score->add_option("--hyp", sc_hyp)->required();
  c_score->add_option("--uem", sc_uem);
  c_score->add_option("--collar", sc_collar, "seconds excluded each side of reference boundaries")->capture_default_str();
  c_score->add_flag("--no-overlap", sc_no_overlap, "exclude regions with 2+ reference speakers");
  c_score->add_flag("--ci", sc_ci, "bootstrap 95% CI over recordings");
  c_score->add_option("--n-bootstrap", sc_nboot)->capture_default_str();
  c_score->add_option("--seed", sc_seed)->capture_default_str();
  c_score->add_option("--format", sc_format)->check(CLI::IsMember({"json", "table", "both"}))->capture_default_str();

  std::string loss_which;
  LossOpts lo;
  auto *c_loss = app.add_subcommand("loss", "evaluate pit, powerset, mixit or pixit on .dkeb matrices");
  c_loss->add_option("type", loss_which)->required()->check(CLI::IsMember({"pit", "powerset", "mixit", "pixit"}));
  c_loss->add_option("--pred", lo.pred, "predictions, T x K (powerset: log-probs T x classes)");
  c_loss->add_option("--ref", lo.ref, "reference activity, T x K");
  c_loss->add_option("--mixtures", lo.mixtures, "2 x T mixtures");
  c_loss->add_option("--sources", lo.sources, "M x T estimated sources");
  c_loss->add_option("--kind", lo.kind, "mse or neg_snr")->capture_default_str();
  c_loss->add_option("--k-max", lo.k_max)->capture_default_str();
  c_loss->add_option("--max-overlap", lo.max_overlap)->capture_default_str();
  c_loss->add_option("--lambda", lo.lambda)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError &e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kExitConfig;
  }
  set_verbose(verbose);

  try {
    if (*c_synth) run_synth(synth);
    if (*c_windows) run_windows(win_vad, win_opts, win_out);
    if (*c_train) run_train_backend(tb_emb, tb_lda, tb_out);
    if (*c_pairs) run_score_pairs(sp_model, sp_emb, sp_pairs, sp_out);
    if (*c_cluster) run_cluster(cl, false);
    if (*c_vbx) run_cluster(vb, true);
    if (*c_run) run_cluster(rn, std::nullopt);
    if (*c_ens) run_ensemble_cmd(ens_inputs, ens_weights, ens_ranks, ens_out);
    if (*c_score) run_score(sc_ref, sc_hyp, sc_uem, sc_collar, sc_no_overlap, sc_ci, sc_nboot, sc_seed, sc_format);
    if (*c_loss) run_loss(loss_which, lo);
  } catch (const ConfigError &e) {
    std::cerr << "diarkit: config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DataError &e) {
    std::cerr << "diarkit: data error: " << e.what() << "\n";
    return kExitData;
  } catch (const std::exception &e) {
    std::cerr << "diarkit: error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
