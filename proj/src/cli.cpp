#include "vgmt/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <sstream>

#include "vgmt/binary_io.hpp"
#include "vgmt/bleu.hpp"
#include "vgmt/checkpoint.hpp"
#include "vgmt/config.hpp"
#include "vgmt/dataset.hpp"
#include "vgmt/decode.hpp"
#include "vgmt/synthetic.hpp"
#include "vgmt/train.hpp"

namespace vgmt {

namespace fs = std::filesystem;

namespace {

struct Flags {
  std::string config;
  std::vector<std::string> models;
  std::string data;
  std::string valid;
  std::string out;
  std::optional<int> beam;
  std::optional<std::uint64_t> seed;
  std::optional<int> jobs;
  std::optional<int> max_len;
  std::optional<int> epochs;
  bool no_pe = false;
  bool text_only = false;

  std::string hyp;
  std::vector<std::string> refs;
  std::string lang = "en";
  bool smooth = false;

  std::string mode = "copy";
  int n_examples = 100;
  int vocab = 10;
  int len = 5;
  int d_feat = 16;
  std::string prefix = "ex";

  std::string path;
};

std::vector<std::string> read_lines(const fs::path& path) {
  std::istringstream in(read_file_bytes(path));
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    lines.push_back(line);
  }
  return lines;
}

void write_text(const std::string& path, const std::string& text, std::ostream& out) {
  if (path.empty() || path == "-") {
    out << text;
  } else {
    write_file_bytes(path, text);
  }
}

int cmd_train(const Flags& f, std::ostream& out, std::ostream& err) {
  RunConfig rc = f.config.empty() ? RunConfig{} : read_run_config(f.config);
  if (!f.data.empty()) rc.train_data = f.data;
  if (!f.valid.empty()) rc.valid_data = f.valid;
  if (!f.out.empty()) rc.out_dir = f.out;
  if (f.seed) rc.seed = f.seed;
  if (f.jobs) rc.jobs = *f.jobs;
  if (f.epochs) rc.train.max_epochs = *f.epochs;
  if (f.no_pe) rc.model.use_pe = false;
  if (f.text_only) rc.model.text_only = true;
  if (!rc.seed) throw UsageError("train: a seed is required (--seed or config key \"seed\")");
  if (rc.train_data.empty()) throw UsageError("train: no training data (--data or config key \"train_data\")");
  if (rc.valid_data.empty()) throw UsageError("train: no validation data (--valid or config key \"valid_data\")");
  if (rc.out_dir.empty()) throw UsageError("train: no output directory (--out or config key \"out_dir\")");

  const auto src_lang = parse_language(rc.model.src_lang);
  const auto tgt_lang = parse_language(rc.model.tgt_lang);
  const auto train_raw = read_dataset(rc.train_data, src_lang, tgt_lang);
  const auto valid_raw = read_dataset(rc.valid_data, src_lang, tgt_lang);

  std::vector<TokenList> src_corpus, tgt_corpus;
  for (const auto& ex : train_raw) {
    src_corpus.push_back(ex.src_tokens);
    tgt_corpus.push_back(ex.tgt_tokens);
  }
  Checkpoint ckpt;
  ckpt.src_vocab = build_vocab(src_corpus, rc.min_freq);
  ckpt.tgt_vocab = build_vocab(tgt_corpus, rc.min_freq);
  ckpt.config = rc.model;
  ckpt.config.vocab_src = ckpt.src_vocab.size();
  ckpt.config.vocab_tgt = ckpt.tgt_vocab.size();
  try {
    ckpt.config.validate();
  } catch (const ContractError& e) {
    throw UsageError(e.what());
  }

  const auto train_set = make_training_examples(train_raw, ckpt.src_vocab, ckpt.tgt_vocab, ckpt.config);
  const auto valid_set = make_training_examples(valid_raw, ckpt.src_vocab, ckpt.tgt_vocab, ckpt.config);

  const fs::path dir(rc.out_dir);
  fs::create_directories(dir);
  write_file_bytes(dir / "config.json", run_config_to_json(rc).dump(2) + "\n");
  write_vocab_file(dir / "src.vocab", ckpt.src_vocab);
  write_vocab_file(dir / "tgt.vocab", ckpt.tgt_vocab);
  std::ofstream log(dir / "train_log.jsonl", std::ios::binary | std::ios::trunc);
  if (!log) throw FormatError("cannot open '" + (dir / "train_log.jsonl").string() + "' for writing");

  const auto ckpt_path = dir / "model.ckpt";
  auto on_epoch = [&](const EpochLog& e, bool improved, const ModelParams<float>& params) {
    nlohmann::ordered_json j;
    j["epoch"] = e.epoch;
    j["train_loss"] = e.train_loss;
    j["valid_loss"] = e.valid_loss;
    j["clipped_frac"] = e.clipped_frac;
    j["seconds"] = e.seconds;
    log << j.dump() << '\n' << std::flush;
    if (improved) {
      ckpt.params = params;
      save_checkpoint(ckpt_path, ckpt);
    }
  };
  const auto result = train(ckpt.config, rc.train, train_set, valid_set, *rc.seed, on_epoch);
  out << "trained " << result.log.size() << " epochs; best epoch " << result.best_epoch << " valid metric "
      << std::setprecision(6) << result.best_metric << "\ncheckpoint: " << ckpt_path.string() << "\n";
  (void)err;
  return kExitOk;
}

int cmd_translate(const Flags& f, std::ostream& out, std::ostream& err) {
  if (f.models.empty()) throw UsageError("translate: at least one --model is required");
  if (f.data.empty()) throw UsageError("translate: --data is required");
  std::vector<Checkpoint> members;
  for (const auto& m : f.models) {
    members.push_back(load_checkpoint(m));
    if (f.no_pe) members.back().config.use_pe = false;
    if (f.text_only) members.back().config.text_only = true;
  }
  std::vector<const Checkpoint*> ptrs;
  for (const auto& m : members) ptrs.push_back(&m);
  for (std::size_t k = 1; k < members.size(); ++k)
    if (!(members[k].tgt_vocab == members[0].tgt_vocab))
      throw FormatError("translate: '" + f.models[k] + "' has a different target vocabulary than '" + f.models[0] + "'");

  RunConfig rc = f.config.empty() ? RunConfig{} : read_run_config(f.config);
  TranslateOptions opt;
  opt.beam = f.beam.value_or(rc.beam);
  opt.max_len = f.max_len.value_or(rc.max_len);
  opt.length_normalize = rc.length_normalize;
  opt.jobs = f.jobs.value_or(rc.jobs);
  if (opt.beam < 1) throw UsageError("translate: --beam must be >= 1");

  const auto& cfg = members.front().config;
  const auto data = read_dataset(f.data, parse_language(cfg.src_lang), parse_language(cfg.tgt_lang));
  const auto result = translate_corpus(ptrs, data, parse_language(cfg.tgt_lang), opt);
  std::string text;
  for (const auto& line : result.lines) text += line + "\n";
  write_text(f.out, text, out);
  for (const auto& e : result.errors) err << "error: " << e << "\n";
  return result.errors.empty() ? kExitOk : kExitData;
}

int cmd_evaluate(const Flags& f, std::ostream& out, std::ostream&) {
  if (f.hyp.empty()) throw UsageError("evaluate: --hyp is required");
  if (f.refs.empty() == f.data.empty()) throw UsageError("evaluate: give references with either --ref or --data");
  const auto lang = parse_language(f.lang);
  const auto hyp_lines = read_lines(f.hyp);
  std::vector<TokenList> hyps;
  for (const auto& l : hyp_lines) hyps.push_back(preprocess(l, lang));

  std::vector<std::vector<TokenList>> refs(hyps.size());
  if (!f.data.empty()) {
    const auto records = read_dataset_records(f.data);
    if (records.size() != hyps.size())
      throw FormatError("evaluate: " + f.hyp + " has " + std::to_string(hyps.size()) + " lines but " + f.data +
                        " has " + std::to_string(records.size()) + " examples");
    for (std::size_t i = 0; i < records.size(); ++i) {
      if (!records[i].tgt) throw FormatError("evaluate: " + f.data + ": example '" + records[i].id + "' has no tgt");
      refs[i].push_back(preprocess(*records[i].tgt, lang));
    }
  } else {
    for (const auto& path : f.refs) {
      const auto lines = read_lines(path);
      if (lines.size() != hyps.size())
        throw FormatError("evaluate: " + f.hyp + " has " + std::to_string(hyps.size()) + " lines but " + path +
                          " has " + std::to_string(lines.size()));
      for (std::size_t i = 0; i < lines.size(); ++i) refs[i].push_back(preprocess(lines[i], lang));
    }
  }
  if (hyps.empty()) throw FormatError("evaluate: " + f.hyp + " is empty");
  BleuOptions bo;
  bo.smooth = f.smooth;
  const auto report = corpus_bleu4(hyps, refs, bo);
  const auto text = bleu_report_to_json(report).dump() + "\n";
  out << text;
  if (!f.out.empty() && f.out != "-") write_file_bytes(f.out, text);
  return kExitOk;
}

int cmd_synth(const Flags& f, std::ostream& out, std::ostream&) {
  if (!f.seed) throw UsageError("synth: --seed is required");
  if (f.out.empty()) throw UsageError("synth: --out DIR is required");
  SyntheticOptions o;
  o.seed = *f.seed;
  o.n_examples = f.n_examples;
  o.vocab_size = f.vocab;
  o.seq_len = f.len;
  o.d_feat = f.d_feat;
  o.mode = parse_synthetic_mode(f.mode);
  o.id_prefix = f.prefix;
  if (o.n_examples < 0 || o.vocab_size < 1 || o.seq_len < 1 || o.d_feat < 1)
    throw UsageError("synth: sizes must be positive");
  if (o.mode == SyntheticMode::OrderSensitive && o.d_feat < o.vocab_size)
    throw UsageError("synth: --dfeat must be >= --vocab in order mode");
  const auto path = write_synthetic_task(f.out, generate_synthetic_task(o));
  out << "wrote " << o.n_examples << " examples to " << path.string() << "\n";
  return kExitOk;
}

int cmd_inspect(const Flags& f, std::ostream& out, std::ostream&) {
  const fs::path path = !f.path.empty() ? fs::path(f.path) : !f.models.empty() ? fs::path(f.models.front()) : fs::path(f.data);
  if (path.empty()) throw UsageError("inspect: give a file to inspect");
  const auto bytes = read_file_bytes(path);
  const auto magic = std::string_view(bytes).substr(0, 4);
  if (magic == kCheckpointMagic) {
    const auto ckpt = decode_checkpoint(bytes, path.string());
    out << "checkpoint " << path.string() << "\n";
    out << "config " << model_config_to_json(ckpt.config).dump() << "\n";
    out << "src_vocab " << ckpt.src_vocab.size() << "\ntgt_vocab " << ckpt.tgt_vocab.size() << "\n";
    std::size_t total = 0;
    const auto params = ckpt.params.named();
    for (const auto& [name, t] : params) {
      out << "param " << name << " " << t.rows() << "x" << t.cols() << "\n";
      total += static_cast<std::size_t>(t.size());
    }
    out << "tensors " << params.size() << "\nparameters " << total << "\n";
    return kExitOk;
  }
  if (magic == kFeatureMagic) {
    const auto m = decode_feature_matrix(bytes, path.string());
    out << "features " << path.string() << "\nrows " << m.rows() << "\ncols " << m.cols() << "\n";
    if (m.size() > 0)
      out << "min " << m.minCoeff() << "\nmax " << m.maxCoeff() << "\nmean " << m.mean() << "\n";
    return kExitOk;
  }
  if (path.extension() == ".jsonl") {
    const auto records = parse_dataset(bytes, path.string());
    std::size_t with_tgt = 0;
    std::map<std::string, std::size_t> feat_keys;
    for (const auto& r : records) {
      with_tgt += r.tgt ? 1 : 0;
      for (const auto& [k, v] : r.feats) ++feat_keys[k];
    }
    out << "dataset " << path.string() << "\nexamples " << records.size() << "\nwith_tgt " << with_tgt << "\n";
    for (const auto& [k, n] : feat_keys) out << "feature_key " << k << " " << n << "\n";
    return kExitOk;
  }
  throw FormatError(path.string() + ": byte offset 0: unrecognised file type", 0);
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Multimodal hierarchical-attention translation toolkit", "vgmt"};
  app.require_subcommand(1);
  Flags f;

  auto* train_cmd = app.add_subcommand("train", "Train a model from JSONL data");
  train_cmd->add_option("--config", f.config, "Run configuration (JSON)");
  train_cmd->add_option("--data", f.data, "Training dataset (JSONL)");
  train_cmd->add_option("--valid", f.valid, "Validation dataset (JSONL)");
  train_cmd->add_option("--out", f.out, "Output directory");
  train_cmd->add_option("--seed", f.seed, "Random seed (required here or in the config)");
  train_cmd->add_option("--jobs", f.jobs, "Worker cap");
  train_cmd->add_option("--epochs", f.epochs, "Maximum number of epochs");
  train_cmd->add_flag("--no-pe", f.no_pe, "Do not add positional encodings to features");
  train_cmd->add_flag("--text-only", f.text_only, "Ignore feature files");

  auto* translate_cmd = app.add_subcommand("translate", "Decode a dataset; repeated --model ensembles");
  translate_cmd->add_option("--model", f.models, "Checkpoint (repeatable)");
  translate_cmd->add_option("--data", f.data, "Dataset to translate (JSONL)");
  translate_cmd->add_option("--out", f.out, "Hypotheses file (default: stdout)");
  translate_cmd->add_option("--config", f.config, "Run configuration (JSON) for decoding defaults");
  translate_cmd->add_option("--beam", f.beam, "Beam size");
  translate_cmd->add_option("--max-len", f.max_len, "Maximum output length");
  translate_cmd->add_option("--jobs", f.jobs, "Parallel decoding workers");
  translate_cmd->add_flag("--no-pe", f.no_pe, "Disable positional encodings at decode time");
  translate_cmd->add_flag("--text-only", f.text_only, "Ignore feature files at decode time");

  auto* evaluate_cmd = app.add_subcommand("evaluate", "Corpus-level BLEU-4 as JSON");
  evaluate_cmd->add_option("--hyp", f.hyp, "Hypotheses, one per line");
  evaluate_cmd->add_option("--ref", f.refs, "Reference file, line-aligned (repeatable)");
  evaluate_cmd->add_option("--data", f.data, "Dataset whose tgt fields are the references");
  evaluate_cmd->add_option("--lang", f.lang, "Tokenisation: en or zh");
  evaluate_cmd->add_option("--out", f.out, "Also write the JSON report here");
  evaluate_cmd->add_flag("--smooth", f.smooth, "Add-one smoothing for 2..4-grams (debugging only)");

  auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic dataset with feature files");
  synth_cmd->add_option("--mode", f.mode, "copy or order");
  synth_cmd->add_option("--n", f.n_examples, "Number of examples");
  synth_cmd->add_option("--seed", f.seed, "Random seed (required)");
  synth_cmd->add_option("--vocab", f.vocab, "Vocabulary size (copy) or symbol count (order)");
  synth_cmd->add_option("--len", f.len, "Sentence length (copy) or feature rows (order)");
  synth_cmd->add_option("--dfeat", f.d_feat, "Feature dimension");
  synth_cmd->add_option("--prefix", f.prefix, "Example id prefix");
  synth_cmd->add_option("--out", f.out, "Output directory");

  auto* inspect_cmd = app.add_subcommand("inspect", "Summarise a checkpoint, feature file or dataset");
  inspect_cmd->add_option("path", f.path, "File to inspect");
  inspect_cmd->add_option("--model", f.models, "Checkpoint to inspect");
  inspect_cmd->add_option("--data", f.data, "Feature file or dataset to inspect");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (train_cmd->parsed()) return cmd_train(f, out, err);
    if (translate_cmd->parsed()) return cmd_translate(f, out, err);
    if (evaluate_cmd->parsed()) return cmd_evaluate(f, out, err);
    if (synth_cmd->parsed()) return cmd_synth(f, out, err);
    if (inspect_cmd->parsed()) return cmd_inspect(f, out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const NumericError& e) {
    err << "numeric error: " << e.what() << "\n";
    return kExitNumeric;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  } catch (const fs::filesystem_error& e) {
    err << "error: " << e.what() << "\n";
    return kExitData;
  }
  return kExitUsage;
}

}  // namespace vgmt
