// Acceptance suite: one PASS/FAIL line per criterion, nonzero exit on any
// failure. Thresholds, seeds and sizes are fixed here.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <fstream>
#include <functional>
#include <iostream>
#include <random>
#include <sstream>
#include <string>
#include <sys/wait.h>
#include <vector>

#include <json.hpp>

#include "bleu_reference.hpp"
#include "decode_reference.hpp"
#include "support.hpp"
#include "vgmt/binary_io.hpp"
#include "vgmt/bleu.hpp"
#include "vgmt/checkpoint.hpp"
#include "vgmt/decode.hpp"
#include "vgmt/features.hpp"
#include "vgmt/grad_check.hpp"
#include "vgmt/synthetic.hpp"
#include "vgmt/train.hpp"

using namespace vgmt;
using namespace vgmt::testing;
namespace fs = std::filesystem;
using Md = Matrix<double>;
using Td = Tensor<double>;

namespace {

struct Verdict {
  bool pass = false;
  std::string detail;
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string fmt(double x, int prec = 4) {
  std::ostringstream o;
  o.precision(prec);
  o << x;
  return o.str();
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const auto n = xs.size();
  return n % 2 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

struct CliResult {
  int code = -1;
  std::string out;
  std::string err;
};

CliResult run_binary(const std::string& args, const fs::path& scratch) {
  const auto out = scratch / "cli.stdout", err = scratch / "cli.stderr";
  const std::string cmd = std::string(VGMT_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  CliResult r;
  r.code = WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
  r.out = fs::exists(out) ? read_file_bytes(out) : "";
  r.err = fs::exists(err) ? read_file_bytes(err) : "";
  return r;
}

void write_text(const fs::path& p, const std::string& s) {
  std::ofstream f(p, std::ios::binary);
  f << s;
}

void randomize(std::vector<NamedTensor<double>>& params, std::mt19937_64& rng, double scale = 0.5) {
  for (auto& [name, t] : params) t.mutable_value() = random_matrix<double>(t.rows(), t.cols(), rng, scale);
}

// ---------------------------------------------------------------------------
// 1. gradient correctness

struct GradSweep {
  double worst = 0.0;
  std::string worst_name;
  int checks = 0;
  int failures = 0;
  void add(const std::string& what, const GradCheckReport& r) {
    ++checks;
    if (!r.passed) ++failures;
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_name = what;
    }
  }
};

void grad_checks_for_seed(std::uint64_t seed, double tol, GradSweep& sweep) {
  std::mt19937_64 rng(seed);
  auto weights = [&](Index r, Index c) { return Td::constant(random_matrix<double>(r, c, rng)); };

  {  // elementary ops
    auto x = Td::parameter(random_matrix<double>(1, 3, rng));
    auto w = Td::parameter(random_matrix<double>(3, 4, rng));
    auto b = Td::parameter(random_matrix<double>(1, 4, rng));
    auto m = Td::parameter(random_matrix<double>(2, 4, rng));
    auto table = Td::parameter(random_matrix<double>(5, 4, rng));
    const auto w1 = weights(1, 8), w2 = weights(4, 2);
    const int target = static_cast<int>(seed % 4);
    std::vector<NamedTensor<double>> ps{{"x", x}, {"w", w}, {"b", b}, {"m", m}, {"table", table}};
    auto f = [&](Graph<double>& g) {
      auto a = add(g, matmul(g, x, w), b);
      auto e = embedding(g, table, static_cast<int>(seed % 5));
      auto gated = mul(g, tanh(g, a), sigmoid(g, sub(g, a, e)));
      auto both = concat_cols<double>(g, std::vector<Td>{softmax(g, gated), log_softmax(g, scale(g, a, 0.7))});
      auto rows = concat_rows<double>(g, std::vector<Td>{add_row_broadcast(g, m, e), a});
      auto tail = slice_rows(g, rows, 1, 2);
      std::vector<Td> terms{sum(g, mul(g, both, w1)), cross_entropy(g, gated, target),
                            mean(g, matmul(g, tail, w2)), sum(g, transpose(g, tail))};
      return add_n<double>(g, terms);
    };
    sweep.add("ops", grad_check(f, ps, tol));
  }

  {  // GRU cell
    auto p = GruParams<double>::init(3, 2, rng);
    std::vector<NamedTensor<double>> ps;
    p.for_each("gru", [&](const std::string& n, Td& t) { ps.emplace_back(n, t); });
    randomize(ps, rng);
    auto x = Td::parameter(random_matrix<double>(1, 3, rng));
    auto h = Td::parameter(random_matrix<double>(1, 2, rng));
    ps.emplace_back("x", x);
    ps.emplace_back("h", h);
    const auto w = weights(1, 2);
    sweep.add("gru", grad_check([&](Graph<double>& g) { return sum(g, mul(g, gru_cell_step(g, x, h, p), w)); }, ps, tol));
  }

  {  // bidirectional encoder
    auto fwd = GruParams<double>::init(2, 2, rng), bwd = GruParams<double>::init(2, 2, rng);
    std::vector<NamedTensor<double>> ps;
    fwd.for_each("fwd", [&](const std::string& n, Td& t) { ps.emplace_back(n, t); });
    bwd.for_each("bwd", [&](const std::string& n, Td& t) { ps.emplace_back(n, t); });
    randomize(ps, rng);
    std::vector<Td> inputs;
    for (int i = 0; i < 3; ++i) {
      inputs.push_back(Td::parameter(random_matrix<double>(1, 2, rng)));
      ps.emplace_back("in" + std::to_string(i), inputs.back());
    }
    const auto w = weights(3, 4);
    auto f = [&](Graph<double>& g) {
      auto states = concat_rows<double>(g, bigru_encode(g, inputs, fwd, bwd));
      return sum(g, mul(g, states, w));
    };
    sweep.add("bigru", grad_check(f, ps, tol));
  }

  {  // additive attention
    auto p = AttentionParams<double>::init(3, 2, 4, rng);
    std::vector<NamedTensor<double>> ps;
    p.for_each("att", [&](const std::string& n, Td& t) { ps.emplace_back(n, t); });
    randomize(ps, rng);
    auto q = Td::parameter(random_matrix<double>(1, 3, rng));
    auto keys = Td::parameter(random_matrix<double>(4, 2, rng));
    ps.emplace_back("query", q);
    ps.emplace_back("keys", keys);
    const auto w = weights(1, 2), wa = weights(4, 1);
    auto f = [&](Graph<double>& g) {
      auto r = additive_attention(g, q, attention_memory(g, keys, p), p);
      return add(g, sum(g, mul(g, r.context, w)), sum(g, mul(g, r.weights, wa)));
    };
    sweep.add("attention", grad_check(f, ps, tol));
  }

  const auto cfg = tiny_config();
  {  // modality fusion, with and without video
    auto p = ModelParams<double>::init(cfg, rng);
    auto all = p.named();
    randomize(all, rng);
    std::vector<NamedTensor<double>> ps;
    for (auto& [n, t] : all)
      if (n.rfind("fusion.", 0) == 0) ps.emplace_back(n, t);
    auto s = Td::parameter(random_matrix<double>(1, cfg.d_dec, rng));
    auto ct = Td::parameter(random_matrix<double>(1, 2 * cfg.d_h, rng));
    auto cv = Td::parameter(random_matrix<double>(1, cfg.d_feat, rng));
    ps.emplace_back("s", s);
    ps.emplace_back("c_text", ct);
    ps.emplace_back("c_video", cv);
    const auto w = weights(1, cfg.d_common), wa = weights(1, 2);
    auto f = [&](Graph<double>& g) {
      auto both = modality_fusion(g, s, ct, cv, p);
      auto text = modality_fusion(g, s, ct, Td(), p);
      std::vector<Td> terms{sum(g, mul(g, both.context, w)), sum(g, mul(g, both.alpha, wa)),
                            sum(g, mul(g, text.context, w))};
      return add_n<double>(g, terms);
    };
    sweep.add("fusion", grad_check(f, ps, tol));
  }

  FeatureMatrix feats(3, cfg.d_feat);
  for (Index i = 0; i < feats.size(); ++i) feats.data()[i] = static_cast<float>(std::normal_distribution<double>()(rng));

  {  // encoder, bridge and one decoder step
    auto p = ModelParams<double>::init(cfg, rng);
    auto ps = p.named();
    randomize(ps, rng);
    const std::vector<int> src{4, 5, static_cast<int>(4 + seed % 2)};
    const auto w = weights(1, cfg.vocab_tgt), ws = weights(1, cfg.d_dec);
    auto f = [&](Graph<double>& g) {
      auto enc = encode<double>(g, src, &feats, p, cfg);
      auto s0 = init_decoder_state(g, enc, p);
      auto step = decoder_step(g, kBosId, s0, enc, p, cfg);
      return add(g, sum(g, mul(g, step.scores, w)), sum(g, mul(g, s0, ws)));
    };
    sweep.add("decoder_step", grad_check(f, ps, tol));
  }

  {  // full model loss, mixed video and text-only examples
    auto p = ModelParams<double>::init(cfg, rng);
    auto ps = p.named();
    randomize(ps, rng);
    auto shared = std::make_shared<const FeatureMatrix>(feats);
    TrainingExample a, b;
    a.src_ids = {4, 5};
    a.tgt_ids = {kBosId, 4, 6, kEosId};
    a.feats = shared;
    b.src_ids = {5};
    b.tgt_ids = {kBosId, 5, kEosId};
    const std::vector<TrainingExample> batch{a, b};
    sweep.add("model", grad_check([&](Graph<double>& g) { return sequence_loss<double>(g, batch, p, cfg); }, ps, tol));

    auto text_cfg = cfg;
    text_cfg.text_only = true;
    text_cfg.use_pe = seed % 2 == 0;
    sweep.add("model_text_only",
              grad_check([&](Graph<double>& g) { return sequence_loss<double>(g, batch, p, text_cfg); }, ps, tol));
  }
}

Verdict criterion_gradients() {
  const auto t0 = Clock::now();
  const double tol = 1e-4;
  const int seeds = 100;
  GradSweep sweep;
  for (int s = 0; s < seeds; ++s) grad_checks_for_seed(static_cast<std::uint64_t>(s), tol, sweep);
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = sweep.failures == 0 && secs < 120.0;
  v.detail = std::to_string(sweep.checks) + " checks over " + std::to_string(seeds) + " seeds, " +
             std::to_string(sweep.failures) + " failed, worst rel error " + fmt(sweep.worst) + " (" + sweep.worst_name +
             "), tol " + fmt(tol) + ", " + fmt(secs, 3) + "s (limit 120s)";
  return v;
}

// ---------------------------------------------------------------------------
// Synthetic-task training shared by criteria 2, 3 and 8

struct Task {
  std::vector<ParallelExample> train, valid;
  Vocabulary src_vocab, tgt_vocab;
};

Task make_task(const fs::path& dir, SyntheticOptions opt, int n_train, int n_valid) {
  Task task;
  opt.n_examples = n_train;
  opt.id_prefix = "t";
  const auto train_path = write_synthetic_task(dir / "train", generate_synthetic_task(opt));
  opt.n_examples = n_valid;
  opt.seed += 7919;
  opt.id_prefix = "v";
  const auto valid_path = write_synthetic_task(dir / "valid", generate_synthetic_task(opt));
  task.train = read_dataset(train_path, Language::English, Language::English);
  task.valid = read_dataset(valid_path, Language::English, Language::English);
  std::vector<TokenList> src, tgt;
  for (const auto& ex : task.train) {
    src.push_back(ex.src_tokens);
    tgt.push_back(ex.tgt_tokens);
  }
  task.src_vocab = build_vocab(src, 1);
  task.tgt_vocab = build_vocab(tgt, 1);
  return task;
}

Checkpoint train_on(const Task& task, ModelConfig cfg, const TrainOptions& opt, std::uint64_t seed) {
  Checkpoint ck;
  ck.src_vocab = task.src_vocab;
  ck.tgt_vocab = task.tgt_vocab;
  cfg.vocab_src = task.src_vocab.size();
  cfg.vocab_tgt = task.tgt_vocab.size();
  ck.config = cfg;
  const auto tr = make_training_examples(task.train, ck.src_vocab, ck.tgt_vocab, cfg);
  const auto va = make_training_examples(task.valid, ck.src_vocab, ck.tgt_vocab, cfg);
  ck.params = train(cfg, opt, tr, va, seed).best_params;
  return ck;
}

// Exact-sequence accuracy on the validation set with the default beam.
double accuracy(const std::vector<const Checkpoint*>& members, const Task& task) {
  TranslateOptions opt;
  opt.beam = 5;
  opt.max_len = 12;
  const auto out = translate_corpus(members, task.valid, Language::English, opt);
  if (!out.errors.empty()) throw Error("translation failed: " + out.errors.front());
  int right = 0;
  for (std::size_t i = 0; i < task.valid.size(); ++i)
    right += out.lines[i] == join_tokens(task.valid[i].tgt_tokens, Language::English) ? 1 : 0;
  return static_cast<double>(right) / static_cast<double>(task.valid.size());
}

ModelConfig order_config() {
  ModelConfig c;
  c.d_emb = 8;
  c.d_h = 8;
  c.d_dec = 32;
  c.d_feat = 16;
  c.d_common = 32;
  c.d_att = 16;
  c.dropout = 0.0;
  return c;
}

TrainOptions order_training() {
  TrainOptions t;
  t.adam.lr = 0.01;
  t.batch_size = 32;
  t.max_epochs = 15;
  t.patience = 5;
  return t;
}

// ---------------------------------------------------------------------------
// 2. positional encoding ablation

Verdict criterion_pe_ablation() {
  const auto t0 = Clock::now();
  const double pe_floor = 0.90, no_pe_ceiling = 0.60;
  std::ostringstream detail;
  bool pass = true;
  for (int symbols : {2, 3, 4}) {
    std::vector<double> with_pe, without_pe;
    for (std::uint64_t seed = 1; seed <= 5; ++seed) {
      SyntheticOptions so;
      so.mode = SyntheticMode::OrderSensitive;
      so.seed = 100 * static_cast<std::uint64_t>(symbols) + seed;
      so.vocab_size = symbols;
      so.seq_len = 4;
      so.d_feat = 16;
      const auto task = make_task(scratch_dir("acc_order"), so, 2000, 500);
      auto cfg = order_config();
      const auto pe = train_on(task, cfg, order_training(), seed);
      cfg.use_pe = false;
      const auto no_pe = train_on(task, cfg, order_training(), seed);
      with_pe.push_back(accuracy({&pe}, task));
      without_pe.push_back(accuracy({&no_pe}, task));
    }
    const double a = median(with_pe), b = median(without_pe);
    pass = pass && a >= pe_floor && b <= no_pe_ceiling;
    detail << symbols << " symbols: PE " << fmt(a, 3) << ", no PE " << fmt(b, 3) << "; ";
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = pass && secs < 600.0;
  v.detail = "median exact-sequence accuracy over 5 seeds, " + detail.str() + "need PE >= " + fmt(pe_floor) +
             " and no PE <= " + fmt(no_pe_ceiling) + ", " + fmt(secs, 3) + "s (limit 600s)";
  return v;
}

// ---------------------------------------------------------------------------
// 3. ensemble direction

Verdict criterion_ensemble_gain() {
  const auto t0 = Clock::now();
  std::vector<double> gains, ens_acc, best_acc;
  for (std::uint64_t trial = 1; trial <= 5; ++trial) {
    SyntheticOptions so;
    so.mode = SyntheticMode::OrderSensitive;
    so.seed = 500 + trial;
    so.vocab_size = 4;
    so.seq_len = 6;
    so.d_feat = 16;
    const auto task = make_task(scratch_dir("acc_ensemble"), so, 600, 300);
    auto opt = order_training();
    opt.max_epochs = 6;
    std::vector<Checkpoint> members;
    for (std::uint64_t k = 0; k < 3; ++k) members.push_back(train_on(task, order_config(), opt, 10 * trial + k));
    double best = 0.0;
    for (const auto& m : members) best = std::max(best, accuracy({&m}, task));
    const double ens = accuracy({&members[0], &members[1], &members[2]}, task);
    gains.push_back(ens - best);
    ens_acc.push_back(ens);
    best_acc.push_back(best);
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = median(gains) >= 0.0 && secs < 600.0;
  std::ostringstream d;
  d << "3-member ensemble vs best member accuracy per trial:";
  for (std::size_t i = 0; i < gains.size(); ++i) d << " " << fmt(ens_acc[i], 3) << " vs " << fmt(best_acc[i], 3) << ";";
  d << "; median gain " << fmt(median(gains), 3) << " (need >= 0), " << fmt(secs, 3) << "s (limit 600s)";
  v.detail = d.str();
  return v;
}

// ---------------------------------------------------------------------------
// 4. beam search against exhaustive enumeration

Verdict criterion_beam_oracle() {
  const auto t0 = Clock::now();
  const int vocab = 5;
  int beam_ok = 0, greedy_ok = 0;
  for (std::uint64_t i = 0; i < 200; ++i) {
    const auto ck = random_checkpoint(1000 + i, vocab);
    std::mt19937_64 rng(i);
    const std::vector<int> src{4, static_cast<int>(4 + i % 2), 5};
    FeatureMatrix feats = random_matrix<float>(1 + static_cast<Index>(i % 3), ck.config.d_feat, rng);
    ModelSession<float> s(ck.params, ck.config, src, i % 4 == 3 ? nullptr : &feats);
    BeamOptions opt;
    opt.max_len = 1 + static_cast<int>(i % 4);
    opt.beam = 625;  // >= 5^4
    opt.length_normalize = i % 2 == 0;
    const auto got = beam_search(s, opt).front();
    const auto want = brute_force(s, vocab, opt.max_len, opt.length_normalize);
    beam_ok += got.ids == want.ids ? 1 : 0;
  }
  for (std::uint64_t i = 0; i < 100; ++i) {
    const auto ck = random_checkpoint(5000 + i, vocab);
    std::mt19937_64 rng(i);
    FeatureMatrix feats = random_matrix<float>(2, ck.config.d_feat, rng);
    const std::vector<int> src{5, 4};
    ModelSession<float> s(ck.params, ck.config, src, &feats);
    BeamOptions opt;
    opt.beam = 1;
    opt.max_len = 10;
    opt.length_normalize = i % 2 == 0;
    greedy_ok += beam_search(s, opt).front().ids == greedy_decode(s, 10).ids ? 1 : 0;
  }
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = beam_ok == 200 && greedy_ok == 100 && secs < 60.0;
  v.detail = "beam 625 == brute force on " + std::to_string(beam_ok) + "/200 (V=5, max_len 1..4), beam 1 == greedy on " +
             std::to_string(greedy_ok) + "/100, " + fmt(secs, 3) + "s (limit 60s)";
  return v;
}

// ---------------------------------------------------------------------------
// 5. BLEU against a reference scorer

Verdict criterion_bleu_oracle() {
  const auto t0 = Clock::now();
  std::mt19937_64 rng(31337);
  std::uniform_int_distribution<int> tok(0, 19), len(1, 30), nref(1, 4), nseg(1, 40);
  double worst = 0.0;
  int nonzero = 0;
  for (int c = 0; c < 50; ++c) {
    std::vector<TokenList> hyps;
    std::vector<std::vector<TokenList>> refs;
    auto sentence = [&] {
      TokenList t;
      for (int i = len(rng); i > 0; --i) t.push_back("w" + std::to_string(tok(rng)));
      return t;
    };
    for (int s = nseg(rng); s > 0; --s) {
      // Half of the hypotheses are noisy copies of a reference so that
      // higher-order n-grams match too.
      std::vector<TokenList> rs;
      for (int k = nref(rng); k > 0; --k) rs.push_back(sentence());
      TokenList h = rng() % 2 ? sentence() : rs.front();
      for (auto& w : h)
        if (rng() % 5 == 0) w = "w" + std::to_string(tok(rng));
      if (rng() % 3 == 0 && h.size() > 1) h.pop_back();
      hyps.push_back(h);
      refs.push_back(rs);
    }
    const auto got = corpus_bleu4(hyps, refs);
    const auto want = reference_bleu(hyps, refs);
    worst = std::max(worst, std::abs(got.bleu - want.bleu));
    for (int n = 0; n < 4; ++n) worst = std::max(worst, std::abs(got.precisions[n] - want.p[n]));
    worst = std::max(worst, std::abs(got.brevity_penalty - want.bp));
    nonzero += got.bleu > 0.0 ? 1 : 0;
  }

  const std::vector<TokenList> clip_h{{"the", "the", "the", "the"}};
  const std::vector<std::vector<TokenList>> clip_r{{{"the", "cat"}}};
  const auto clip = corpus_bleu4(clip_h, clip_r);
  const bool clip_ok = clip.precisions[0] == 0.25 && clip.bleu == 0.0;

  const std::vector<TokenList> bp_h{{"a", "b", "c", "d"}};
  const std::vector<std::vector<TokenList>> bp_r{{{"a", "b", "c", "d", "e", "f", "g", "h"}}};
  const auto bp = corpus_bleu4(bp_h, bp_r);
  const bool bp_ok = std::abs(bp.brevity_penalty - std::exp(-1.0)) < 1e-12 && std::abs(bp.bleu - std::exp(-1.0)) < 1e-12;

  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = worst <= 1e-9 && clip_ok && bp_ok && secs < 60.0;
  v.detail = "50 corpora (" + std::to_string(nonzero) + " with nonzero BLEU), max |diff| " + fmt(worst) +
             " (tol 1e-9); clipped 'the' case " + (clip_ok ? "ok" : "WRONG") + "; BP exp(-1) case " +
             (bp_ok ? "ok" : "WRONG") + ", " + fmt(secs, 3) + "s";
  return v;
}

// ---------------------------------------------------------------------------
// 6. ensemble identity through the CLI

Verdict criterion_ensemble_identity() {
  const auto dir = scratch_dir("acc_identity");
  auto ck = random_checkpoint(77, 9);
  save_checkpoint(dir / "m0.ckpt", ck);
  for (int k = 1; k < 5; ++k) fs::copy_file(dir / "m0.ckpt", dir / ("m" + std::to_string(k) + ".ckpt"));

  std::mt19937_64 rng(3);
  std::vector<DatasetRecord> records;
  fs::create_directories(dir / "feats");
  for (int i = 0; i < 30; ++i) {
    DatasetRecord r;
    r.id = "x" + std::to_string(i);
    r.src = i % 3 == 0 ? "a b a" : i % 3 == 1 ? "b" : "b a unknown";
    const auto fp = "feats/" + r.id + ".vgmf";
    write_feature_file(dir / fp, random_matrix<float>(1 + i % 5, ck.config.d_feat, rng));
    r.feats["feat"] = fp;
    records.push_back(r);
  }
  write_dataset(dir / "data.jsonl", records);

  const std::string data = " --data " + (dir / "data.jsonl").string() + " --max-len 8";
  const auto single = run_binary("translate --model " + (dir / "m0.ckpt").string() + data, dir);
  std::ostringstream d;
  bool pass = single.code == 0 && !single.out.empty();
  std::size_t distinct = 0;
  {
    std::vector<std::string> lines;
    std::istringstream in(single.out);
    for (std::string l; std::getline(in, l);) lines.push_back(l);
    std::sort(lines.begin(), lines.end());
    distinct = static_cast<std::size_t>(std::unique(lines.begin(), lines.end()) - lines.begin());
  }
  d << "single model exit " << single.code << ", " << distinct << " distinct outputs over 30 inputs;";
  for (int k : {2, 3, 5}) {
    std::string models;
    for (int j = 0; j < k; ++j) models += " --model " + (dir / ("m" + std::to_string(j) + ".ckpt")).string();
    const auto ens = run_binary("translate" + models + data, dir);
    const bool same = ens.code == 0 && ens.out == single.out;
    pass = pass && same;
    d << " k=" << k << (same ? " identical" : " DIFFERENT");
  }
  Verdict v;
  v.pass = pass;
  v.detail = d.str();
  return v;
}

// ---------------------------------------------------------------------------
// 7. determinism, round trips, uniform loss

std::string log_without_timing(const std::string& log) {
  std::istringstream in(log);
  std::string out;
  for (std::string line; std::getline(in, line);) {
    auto j = nlohmann::ordered_json::parse(line);
    j.erase("seconds");
    out += j.dump() + "\n";
  }
  return out;
}

Verdict criterion_determinism() {
  std::ostringstream d;
  bool pass = true;

  {  // two training runs with one seed
    const auto dir = scratch_dir("acc_determinism");
    SyntheticOptions so;
    so.seed = 4;
    so.n_examples = 120;
    so.vocab_size = 6;
    so.seq_len = 4;
    so.d_feat = 8;
    write_synthetic_task(dir / "data", generate_synthetic_task(so));
    write_text(dir / "config.json", R"({"d_emb": 8, "d_h": 8, "d_dec": 16, "d_feat": 8, "d_common": 16,
      "d_att": 8, "dropout": 0.3, "lr": 0.01, "batch_size": 16, "max_epochs": 4, "min_freq": 1})");
    const std::string common = "train --config " + (dir / "config.json").string() + " --data " +
                               (dir / "data" / "data.jsonl").string() + " --valid " +
                               (dir / "data" / "data.jsonl").string() + " --out ";
    const auto a = run_binary(common + (dir / "a").string() + " --seed 11", dir);
    const auto b = run_binary(common + (dir / "b").string() + " --seed 11", dir);
    const auto c = run_binary(common + (dir / "c").string() + " --seed 12", dir);
    bool same = a.code == 0 && b.code == 0 && c.code == 0;
    if (same) {
      for (const char* f : {"model.ckpt", "src.vocab", "tgt.vocab"})
        same = same && read_file_bytes(dir / "a" / f) == read_file_bytes(dir / "b" / f);
      // The recorded output directory is the one intended difference.
      auto config = [&](const char* run) {
        auto j = nlohmann::ordered_json::parse(read_file_bytes(dir / run / "config.json"));
        j.erase("out_dir");
        return j.dump();
      };
      same = same && config("a") == config("b");
      same = same && log_without_timing(read_file_bytes(dir / "a" / "train_log.jsonl")) ==
                         log_without_timing(read_file_bytes(dir / "b" / "train_log.jsonl"));
      same = same && read_file_bytes(dir / "a" / "model.ckpt") != read_file_bytes(dir / "c" / "model.ckpt");
    }
    pass = pass && same;
    d << "same-seed runs " << (same ? "byte-identical (other seed differs)" : "DIFFER") << ";";
  }

  {  // feature round trip, including awkward values
    const auto dir = scratch_dir("acc_roundtrip");
    std::mt19937_64 rng(8);
    FeatureMatrix m = random_matrix<float>(7, 5, rng, 1e3);
    m(0, 0) = -0.0f;
    m(0, 1) = std::numeric_limits<float>::denorm_min();
    m(0, 2) = std::numeric_limits<float>::max();
    m(0, 3) = std::numeric_limits<float>::lowest();
    m(0, 4) = 1.0f / 3.0f;
    write_feature_file(dir / "m.vgmf", m);
    const auto back = read_feature_file(dir / "m.vgmf");
    const bool ok = back.rows() == m.rows() && back.cols() == m.cols() &&
                    std::memcmp(back.data(), m.data(), sizeof(float) * static_cast<std::size_t>(m.size())) == 0 &&
                    read_file_bytes(dir / "m.vgmf").size() == 16 + 4 * static_cast<std::size_t>(m.size());
    pass = pass && ok;
    d << " feature round trip " << (ok ? "bit-exact" : "BROKEN") << ";";

    const auto ck = random_checkpoint(21, 9);
    save_checkpoint(dir / "c.ckpt", ck);
    const auto ck2 = load_checkpoint(dir / "c.ckpt");
    bool ck_ok = encode_checkpoint(ck2) == read_file_bytes(dir / "c.ckpt") && ck2.config == ck.config &&
                 ck2.src_vocab == ck.src_vocab && ck2.tgt_vocab == ck.tgt_vocab;
    const auto pa = ck.params.named(), pb = ck2.params.named();
    ck_ok = ck_ok && pa.size() == pb.size();
    for (std::size_t i = 0; ck_ok && i < pa.size(); ++i) {
      const auto& x = pa[i].second.value();
      const auto& y = pb[i].second.value();
      ck_ok = x.rows() == y.rows() && x.cols() == y.cols() &&
              std::memcmp(x.data(), y.data(), sizeof(float) * static_cast<std::size_t>(x.size())) == 0;
    }
    pass = pass && ck_ok;
    d << " checkpoint round trip " << (ck_ok ? "bit-exact" : "BROKEN") << ";";
  }

  {  // uniform logits
    Graph<double> g(false);
    const double two = cross_entropy(g, Td::constant(Md::Zero(1, 2)), 1).item();
    const double err2 = std::abs(two - std::log(2.0));

    auto cfg = tiny_config(8, 2655);
    std::mt19937_64 rng(5);
    auto p = cast_params<double>(ModelParams<float>::init(cfg, rng));
    p.out_W.mutable_value().setZero();
    p.out_b.mutable_value().setZero();
    TrainingExample ex;
    ex.src_ids = {4, 5, 6};
    ex.tgt_ids = {kBosId, 100, 2000, kEosId};
    const std::vector<TrainingExample> batch{ex};
    const double big = sequence_loss<double>(g, batch, p, cfg).item();
    const double err_big = std::abs(big - std::log(2655.0));
    const bool ok = err2 <= 1e-6 && err_big <= 1e-6;
    pass = pass && ok;
    d << " uniform loss error V=2 " << fmt(err2) << ", V=2655 " << fmt(err_big) << " (tol 1e-6)";
  }
  Verdict v;
  v.pass = pass;
  v.detail = d.str();
  return v;
}

// ---------------------------------------------------------------------------
// 8. command-line pipeline on the copy task

Verdict criterion_end_to_end() {
  const auto t0 = Clock::now();
  const auto dir = scratch_dir("acc_e2e");
  std::ostringstream d;
  auto step = [&](const std::string& args) {
    const auto r = run_binary(args, dir);
    if (r.code != 0) d << "'" << args.substr(0, args.find(' ')) << "' exited " << r.code << ": " << r.err << "; ";
    return r;
  };
  step("synth --mode copy --n 1000 --vocab 8 --len 5 --dfeat 8 --seed 1 --out " + (dir / "train").string());
  step("synth --mode copy --n 100 --vocab 8 --len 5 --dfeat 8 --seed 2 --prefix v --out " + (dir / "valid").string());
  write_text(dir / "config.json", R"({"d_emb": 16, "d_h": 16, "d_dec": 32, "d_feat": 8, "d_common": 16,
    "d_att": 16, "dropout": 0.0, "lr": 0.01, "batch_size": 16, "max_epochs": 10, "patience": 3, "min_freq": 1})");
  step("train --config " + (dir / "config.json").string() + " --data " + (dir / "train" / "data.jsonl").string() +
       " --valid " + (dir / "valid" / "data.jsonl").string() + " --seed 1 --out " + (dir / "run").string());
  step("translate --model " + (dir / "run" / "model.ckpt").string() + " --data " +
       (dir / "valid" / "data.jsonl").string() + " --out " + (dir / "hyp.txt").string());
  const auto eval = step("evaluate --hyp " + (dir / "hyp.txt").string() + " --data " +
                         (dir / "valid" / "data.jsonl").string());
  double bleu = -1.0;
  if (eval.code == 0) bleu = nlohmann::json::parse(eval.out)["bleu"].get<double>();
  const double secs = seconds_since(t0);
  Verdict v;
  v.pass = bleu > 0.95 && secs < 300.0;
  d << "corpus BLEU " << fmt(bleu) << " (need > 0.95), " << fmt(secs, 3) << "s (limit 300s)";
  v.detail = d.str();
  return v;
}

// ---------------------------------------------------------------------------
// 9. malformed inputs through the CLI

Verdict criterion_format_rejection() {
  const auto dir = scratch_dir("acc_formats");
  std::ostringstream d;
  bool pass = true;
  auto expect = [&](const std::string& label, const std::string& args, const std::string& marker) {
    const auto r = run_binary(args, dir);
    const bool ok = r.code == 2 && r.err.find(marker) != std::string::npos;
    pass = pass && ok;
    d << label << (ok ? " ok" : " FAILED (exit " + std::to_string(r.code) + ": " + r.err + ")") << "; ";
  };

  SyntheticOptions so;
  so.seed = 9;
  so.n_examples = 3;
  so.d_feat = 4;
  write_synthetic_task(dir / "set", generate_synthetic_task(so));
  const auto good = read_file_bytes(dir / "set" / "feats" / "ex0.vgmf");

  write_text(dir / "magic.vgmf", "VGMX" + good.substr(4));
  expect("bad magic", "inspect " + (dir / "magic.vgmf").string(), "byte offset 0");
  write_text(dir / "trunc.vgmf", good.substr(0, good.size() - 5));
  expect("truncated payload", "inspect " + (dir / "trunc.vgmf").string(), "byte offset");
  write_text(dir / "header.vgmf", good.substr(0, 10));
  expect("truncated header", "inspect " + (dir / "header.vgmf").string(), "byte offset");

  const auto lines = read_file_bytes(dir / "set" / "data.jsonl");
  write_text(dir / "bad.jsonl", lines + "{\"id\": \"broken\", \"src\": \"a b\"\n");
  expect("malformed JSONL (inspect)", "inspect " + (dir / "bad.jsonl").string(), "bad.jsonl:4:");
  write_text(dir / "bad2.jsonl", "{\"id\": \"a\", \"src\": 3}\n");
  expect("wrong field type (train)",
         "train --seed 1 --data " + (dir / "bad2.jsonl").string() + " --valid " + (dir / "bad2.jsonl").string() +
             " --out " + (dir / "run").string(),
         "bad2.jsonl:1:");

  // A dataset pointing at a truncated feature file fails at translate time.
  const auto ck = random_checkpoint(3, 7);
  auto cfg = ck;
  cfg.config.d_feat = 4;
  std::mt19937_64 rng(1);
  cfg.params = ModelParams<float>::init(cfg.config, rng);
  save_checkpoint(dir / "m.ckpt", cfg);
  write_text(dir / "set" / "feats" / "ex1.vgmf", good.substr(0, 20));
  expect("truncated feature file (translate)",
         "translate --model " + (dir / "m.ckpt").string() + " --data " + (dir / "set" / "data.jsonl").string(),
         "byte offset");

  Verdict v;
  v.pass = pass;
  v.detail = d.str();
  return v;
}

}  // namespace

// Optional arguments select criteria by number.
int main(int argc, char** argv) {
  std::vector<int> only;
  for (int i = 1; i < argc; ++i) only.push_back(std::atoi(argv[i]));
  struct Criterion {
    int id;
    const char* name;
    std::function<Verdict()> run;
  };
  const std::vector<Criterion> criteria{
      {1, "gradient correctness", criterion_gradients},
      {2, "positional encoding ablation", criterion_pe_ablation},
      {3, "ensemble accuracy", criterion_ensemble_gain},
      {4, "beam search oracle", criterion_beam_oracle},
      {5, "BLEU oracle", criterion_bleu_oracle},
      {6, "ensemble identity", criterion_ensemble_identity},
      {7, "determinism and round trips", criterion_determinism},
      {8, "end-to-end copy task", criterion_end_to_end},
      {9, "format rejection", criterion_format_rejection},
  };
  int failures = 0, ran = 0;
  for (const auto& c : criteria) {
    if (!only.empty() && std::find(only.begin(), only.end(), c.id) == only.end()) continue;
    ++ran;
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v.pass = false;
      v.detail = std::string("exception: ") + e.what();
    }
    failures += v.pass ? 0 : 1;
    std::cout << (v.pass ? "PASS" : "FAIL") << "  " << c.id << ". " << c.name << ": " << v.detail << std::endl;
  }
  std::cout << (ran - failures) << "/" << ran << " criteria passed"
            << std::endl;
  return failures == 0 ? 0 : 1;
}
