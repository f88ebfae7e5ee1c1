#include "easlab/cli/run.hpp"

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "easlab/dsp/signal.hpp"
#include "easlab/dsp/wav.hpp"
#include "easlab/error.hpp"
#include "easlab/eval/evaluate.hpp"
#include "easlab/eval/report.hpp"
#include "easlab/eval/training_set.hpp"
#include "easlab/listen/http_server.hpp"
#include "easlab/mmse/mmse.hpp"
#include "easlab/nn/model_io.hpp"
#include "easlab/nn/train.hpp"
#include "easlab/stoi/stoi.hpp"
#include "easlab/vocoder/eas_vocoder.hpp"

namespace easlab::cli {
namespace {

namespace fs = std::filesystem;
using nlohmann::json;

json load_json(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path);
  try {
    json j = json::parse(in);
    if (!j.is_object()) throw InvalidArgument("config " + path + " must hold a JSON object");
    return j;
  } catch (const json::exception& e) {
    throw InvalidArgument("bad config " + path + ": " + e.what());
  }
}

// Settings precedence: built-in default < config file < explicit flag.
template <typename T>
void from_config(const json& cfg, const char* key, T& field, const CLI::Option* flag = nullptr) {
  if (flag && flag->count() > 0) return;
  if (!cfg.contains(key)) return;
  try {
    field = cfg.at(key).get<T>();
  } catch (const json::exception& e) {
    throw InvalidArgument(std::string("config key '") + key + "': " + e.what());
  }
}

dsp::WavWriteOptions wav_options(bool as_float) {
  return {as_float ? dsp::WavEncoding::Float32 : dsp::WavEncoding::Pcm16, true};
}

std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

std::string join(const std::vector<double>& v) {
  std::string out;
  char buf[32];
  for (double d : v) {
    std::snprintf(buf, sizeof buf, "%g", d);
    out += (out.empty() ? "" : ",") + std::string(buf);
  }
  return out;
}

nn::Objective parse_objective(const std::string& s) {
  if (s == "mse") return nn::Objective::Mse;
  if (s == "stoi") return nn::Objective::Stoi;
  if (s == "combined") return nn::Objective::Combined;
  throw InvalidArgument("unknown objective '" + s + "'");
}

mmse::MmseConfig mmse_config(const json& cfg) {
  mmse::MmseConfig c;
  from_config(cfg, "frame_len", c.frame_len);
  from_config(cfg, "hop", c.hop);
  from_config(cfg, "dd_alpha", c.dd_alpha);
  from_config(cfg, "xi_min_db", c.xi_min_db);
  from_config(cfg, "noise_init_frames", c.noise_init_frames);
  from_config(cfg, "gain_floor", c.gain_floor);
  c.validate();
  return c;
}

nn::FcnModel load_fcn(const std::string& path) {
  if (nn::peek_model_kind(fs::path(path)) != nn::ModelKind::Fcn) {
    throw InvalidArgument(path + " does not hold an FCN model");
  }
  return nn::load_fcn(path);
}

nn::DdaeModel load_ddae(const std::string& path) {
  if (nn::peek_model_kind(fs::path(path)) != nn::ModelKind::Ddae) {
    throw InvalidArgument(path + " does not hold a DDAE model");
  }
  return nn::load_ddae(path);
}

// --models dir supplies fcn.easm / ddae.easm; explicit paths win.
eval::MethodResources load_resources(const std::string& models_dir, std::string fcn_path,
                                     std::string ddae_path, const mmse::MmseConfig& mmse) {
  eval::MethodResources r;
  r.mmse = mmse;
  if (!models_dir.empty()) {
    if (fcn_path.empty() && fs::exists(fs::path(models_dir) / "fcn.easm")) {
      fcn_path = (fs::path(models_dir) / "fcn.easm").string();
    }
    if (ddae_path.empty() && fs::exists(fs::path(models_dir) / "ddae.easm")) {
      ddae_path = (fs::path(models_dir) / "ddae.easm").string();
    }
  }
  if (!fcn_path.empty()) r.fcn = std::make_shared<const nn::FcnModel>(load_fcn(fcn_path));
  if (!ddae_path.empty()) r.ddae = std::make_shared<const nn::DdaeModel>(load_ddae(ddae_path));
  return r;
}

struct Context {
  std::ostream& out;
  std::ostream& err;
  bool verbose = false;
};

void add_mix(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("mix", "Add noise to clean speech at a target SNR");
  struct Opts {
    double snr = 0.0;
    std::uint64_t seed = kDefaultSeed;
    std::string clean, noise, out;
    bool as_float = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--snr", o->snr, "Target SNR in dB")->required();
  cmd->add_option("--seed", o->seed, "Noise crop seed");
  cmd->add_flag("--float", o->as_float, "Write 32-bit float WAV");
  cmd->add_option("clean", o->clean)->required();
  cmd->add_option("noise", o->noise)->required();
  cmd->add_option("out", o->out)->required();
  cmd->callback([o, &ctx] {
    const dsp::SampleBuffer clean = dsp::load_wav(o->clean);
    const dsp::SampleBuffer noise = dsp::load_wav(o->noise);
    const dsp::SampleBuffer mixture = eval::make_mixture(clean, noise, o->snr, o->seed);
    dsp::save_wav(mixture, o->out, wav_options(o->as_float));
    if (ctx.verbose) ctx.err << "mixed at " << o->snr << " dB, seed " << o->seed << "\n";
  });
}

void add_enhance(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("enhance", "Enhance a noisy recording");
  struct Opts {
    std::string method = "mmse", model, config, in, out;
    bool as_float = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--method", o->method, "mmse | fcn | ddae")
      ->check(CLI::IsMember({"mmse", "fcn", "ddae", "noisy"}));
  cmd->add_option("--model", o->model, "Model file for fcn/ddae");
  cmd->add_option("--config", o->config, "JSON file with MMSE settings");
  cmd->add_flag("--float", o->as_float, "Write 32-bit float WAV");
  cmd->add_option("in", o->in)->required();
  cmd->add_option("out", o->out)->required();
  cmd->callback([o, &ctx] {
    const json cfg = o->config.empty() ? json::object() : load_json(o->config);
    eval::MethodResources res;
    res.mmse = mmse_config(cfg);
    if (o->method == "fcn" || o->method == "ddae") {
      if (o->model.empty()) throw InvalidArgument("--model is required for method " + o->method);
      if (o->method == "fcn") res.fcn = std::make_shared<const nn::FcnModel>(load_fcn(o->model));
      if (o->method == "ddae") res.ddae = std::make_shared<const nn::DdaeModel>(load_ddae(o->model));
    }
    const dsp::SampleBuffer noisy = dsp::load_wav(o->in);
    dsp::save_wav(eval::make_method(o->method, res).enhance(noisy), o->out, wav_options(o->as_float));
    if (ctx.verbose) ctx.err << "enhanced with " << o->method << "\n";
  });
}

void add_vocode(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("vocode", "Simulate electric-acoustic hearing");
  struct Opts {
    std::string config, id, in, out, envelopes;
    std::uint64_t seed = kDefaultSeed;
    bool as_float = false;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--config", o->config, "JSON vocoder settings");
  auto* seed = cmd->add_option("--seed", o->seed, "Carrier seed");
  cmd->add_option("--id", o->id, "Utterance id for carrier seeding (default: input file stem)");
  cmd->add_option("--envelopes", o->envelopes, "Write channel envelopes as CSV");
  cmd->add_flag("--float", o->as_float, "Write 32-bit float WAV");
  cmd->add_option("in", o->in)->required();
  cmd->add_option("out", o->out)->required();
  cmd->callback([o, seed, &ctx] {
    vocoder::EasVocoderConfig cfg =
        o->config.empty() ? vocoder::EasVocoderConfig{} : vocoder::load_vocoder_config(o->config);
    if (seed->count() > 0 || o->config.empty()) cfg.rng_seed = o->seed;
    const std::string id = o->id.empty() ? fs::path(o->in).stem().string() : o->id;
    const vocoder::VocodeResult r = vocoder::vocode_eas(dsp::load_wav(o->in), cfg, id);
    if (r.silent_input) ctx.err << "warning: input is silent; wrote silence\n";
    dsp::save_wav(r.output, o->out, wav_options(o->as_float));
    if (!o->envelopes.empty()) vocoder::write_envelopes_csv(r.envelopes, o->envelopes);
  });
}

void add_stoi(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("stoi", "Score processed speech against clean speech");
  auto files = std::make_shared<std::pair<std::string, std::string>>();
  cmd->add_option("clean", files->first)->required();
  cmd->add_option("processed", files->second)->required();
  cmd->callback([files, &ctx] {
    const double d = stoi::stoi(dsp::load_wav(files->first), dsp::load_wav(files->second));
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6f\n", d);
    ctx.out << buf;
  });
}

void add_train(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("train", "Train an FCN or DDAE enhancer");
  struct Opts {
    std::string method = "fcn", objective = "combined", manifest, out, config, curve, arch = "desk";
    double alpha = 10.0, lr = 1e-3;
    int epochs = 20, batch = 1, max_utts = 0;
    std::uint64_t seed = kDefaultSeed;
    std::string optimizer = "adam";
    std::vector<std::string> noises;
    std::vector<double> snrs = {0.0};
  };
  auto o = std::make_shared<Opts>();
  struct Flags {
    CLI::Option *objective, *alpha, *lr, *epochs, *batch, *seed, *optimizer, *noises, *snrs, *max_utts,
        *arch;
  };
  auto f = std::make_shared<Flags>();
  cmd->add_option("--method", o->method, "fcn | ddae")->check(CLI::IsMember({"fcn", "ddae"}));
  f->objective = cmd->add_option("--objective", o->objective, "mse | stoi | combined (FCN only)")
                     ->check(CLI::IsMember({"mse", "stoi", "combined"}));
  f->alpha = cmd->add_option("--alpha", o->alpha, "Weight of the MSE term in the combined objective");
  f->lr = cmd->add_option("--lr", o->lr, "Learning rate");
  f->epochs = cmd->add_option("--epochs", o->epochs, "Training epochs");
  f->batch = cmd->add_option("--batch", o->batch, "Utterances per update");
  f->seed = cmd->add_option("--seed", o->seed, "Initialization, shuffling and mixing seed");
  f->optimizer = cmd->add_option("--optimizer", o->optimizer, "adam | sgd")->check(CLI::IsMember({"adam", "sgd"}));
  f->noises = cmd->add_option("--noises", o->noises, "Training noise ids")->delimiter(',');
  f->snrs = cmd->add_option("--snrs", o->snrs, "Training SNRs in dB")->delimiter(',');
  f->max_utts = cmd->add_option("--max-utterances", o->max_utts, "Cap on training utterances");
  f->arch = cmd->add_option("--arch", o->arch, "FCN size: desk | full")->check(CLI::IsMember({"desk", "full"}));
  cmd->add_option("--manifest", o->manifest, "Corpus manifest")->required();
  cmd->add_option("--out", o->out, "Model file to write")->required();
  cmd->add_option("--config", o->config, "JSON training settings");
  cmd->add_option("--curve", o->curve, "Write the per-epoch loss curve as CSV");
  cmd->callback([o, f, &ctx] {
    const json cfg = o->config.empty() ? json::object() : load_json(o->config);
    from_config(cfg, "objective", o->objective, f->objective);
    from_config(cfg, "alpha", o->alpha, f->alpha);
    from_config(cfg, "learning_rate", o->lr, f->lr);
    from_config(cfg, "epochs", o->epochs, f->epochs);
    from_config(cfg, "batch_size", o->batch, f->batch);
    from_config(cfg, "seed", o->seed, f->seed);
    from_config(cfg, "optimizer", o->optimizer, f->optimizer);
    from_config(cfg, "noises", o->noises, f->noises);
    from_config(cfg, "snrs", o->snrs, f->snrs);
    from_config(cfg, "max_utterances", o->max_utts, f->max_utts);
    from_config(cfg, "arch", o->arch, f->arch);

    nn::TrainConfig tc;
    tc.objective = parse_objective(o->objective);
    tc.alpha = o->alpha;
    tc.learning_rate = o->lr;
    tc.epochs = o->epochs;
    tc.batch_size = o->batch;
    tc.rng_seed = o->seed;
    tc.optimizer.kind = o->optimizer == "sgd" ? nn::OptimizerConfig::Kind::Sgd : nn::OptimizerConfig::Kind::Adam;
    tc.validate();

    const eval::Manifest manifest = eval::load_manifest(o->manifest);
    const auto pairs = eval::training_pairs(manifest, {o->noises, o->snrs, o->max_utts, o->seed});
    if (ctx.verbose) ctx.err << "training on " << pairs.size() << " utterance pairs\n";
    auto report = [&ctx](int epoch, double loss) {
      if (ctx.verbose) ctx.err << "epoch " << epoch << " loss " << loss << "\n";
    };
    nn::TrainResult result;
    if (o->method == "fcn") {
      nn::FcnModel model = nn::FcnModel::create(
          o->arch == "full" ? nn::FcnArchitecture::full() : nn::FcnArchitecture::desk(), o->seed);
      result = nn::train(model, pairs, tc, report);
      nn::save_model(model, o->out);
    } else {
      nn::DdaeModel model = nn::DdaeModel::create_default(o->seed);
      result = nn::train(model, pairs, tc, report);
      nn::save_model(model, o->out);
    }
    if (!o->curve.empty()) {
      std::ofstream c(o->curve);
      if (!c) throw IoError("cannot write " + o->curve);
      char buf[64];
      c << "epoch,loss\n";
      std::snprintf(buf, sizeof buf, "0,%.17g\n", result.initial_loss);
      c << buf;
      for (std::size_t e = 0; e < result.epoch_loss.size(); ++e) {
        std::snprintf(buf, sizeof buf, "%zu,%.17g\n", e + 1, result.epoch_loss[e]);
        c << buf;
      }
    }
    char buf[96];
    std::snprintf(buf, sizeof buf, "initial_loss %.9g\nfinal_loss %.9g\n", result.initial_loss, result.final_loss);
    ctx.out << buf;
  });
}

void add_evaluate(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("evaluate", "Score enhancement methods over a corpus");
  struct Opts {
    std::string manifest, out, config, models, fcn_model, ddae_model, items;
    std::vector<std::string> methods = {"noisy", "mmse"};
    std::vector<std::string> noises;
    std::vector<double> snrs = {-11, -7, -3, 1, 5, 9};
    std::uint64_t seed = kDefaultSeed;
    int threads = 1;
  };
  auto o = std::make_shared<Opts>();
  struct Flags {
    CLI::Option *methods, *noises, *snrs, *seed, *threads, *models;
  };
  auto f = std::make_shared<Flags>();
  cmd->add_option("--manifest", o->manifest, "Corpus manifest")->required();
  f->methods = cmd->add_option("--methods", o->methods, "Comma-separated methods")->delimiter(',');
  f->noises = cmd->add_option("--noises", o->noises, "Comma-separated test noise ids")->delimiter(',');
  f->snrs = cmd->add_option("--snrs", o->snrs, "Comma-separated SNRs in dB")->delimiter(',');
  f->seed = cmd->add_option("--seed", o->seed, "Mixing seed");
  f->threads = cmd->add_option("--threads", o->threads, "Worker threads");
  f->models = cmd->add_option("--models", o->models, "Directory holding fcn.easm / ddae.easm");
  cmd->add_option("--fcn-model", o->fcn_model, "FCN model file");
  cmd->add_option("--ddae-model", o->ddae_model, "DDAE model file");
  cmd->add_option("--config", o->config, "JSON evaluation settings");
  cmd->add_option("--items", o->items, "Also write per-utterance scores as JSON");
  cmd->add_option("--out", o->out, "Report path (.csv or .json)")->required();
  cmd->callback([o, f, &ctx] {
    const json cfg = o->config.empty() ? json::object() : load_json(o->config);
    from_config(cfg, "methods", o->methods, f->methods);
    from_config(cfg, "noises", o->noises, f->noises);
    from_config(cfg, "snrs", o->snrs, f->snrs);
    from_config(cfg, "seed", o->seed, f->seed);
    from_config(cfg, "threads", o->threads, f->threads);
    from_config(cfg, "models", o->models, f->models);
    const mmse::MmseConfig mmse = mmse_config(cfg.value("mmse", json::object()));

    const eval::Manifest manifest = eval::load_manifest(o->manifest);
    if (o->noises.empty()) {
      for (const eval::NoiseEntry& n : manifest.noises) {
        if (n.split == eval::Split::Test) o->noises.push_back(n.noise_id);
      }
    }
    const eval::MethodResources res = load_resources(o->models, o->fcn_model, o->ddae_model, mmse);
    eval::EvalConfig ec;
    ec.methods = o->methods;
    ec.noises = o->noises;
    ec.snrs_db = o->snrs;
    ec.seed = o->seed;
    ec.threads = o->threads;
    const eval::EvalResult r = eval::evaluate_corpus(manifest, res, ec);

    const eval::ReportMeta meta = {{"methods", join(o->methods)},
                                   {"noises", join(o->noises)},
                                   {"snrs_db", join(o->snrs)},
                                   {"seed", std::to_string(o->seed)},
                                   {"manifest", o->manifest},
                                   {"metric", "stoi"},
                                   {"version", EASLAB_VERSION}};
    eval::emit_report(r.table, o->out, meta);
    if (!o->items.empty()) {
      std::ofstream it(o->items, std::ios::binary);
      if (!it) throw IoError("cannot write " + o->items);
      it << eval::score_table_json(r.table, meta, &r.items);
    }
    if (ctx.verbose) ctx.err << "scored " << r.items.size() << " items\n";
  });
}

void add_ttest(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("ttest", "One-tailed paired t-test (H1: b better than a)");
  struct Opts {
    std::string a, b, method_a, method_b, out;
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--a", o->a, "Scores of approach one (JSON)")->required();
  cmd->add_option("--b", o->b, "Scores of approach two (JSON)")->required();
  cmd->add_option("--method-a", o->method_a, "Method filter when --a is an items report");
  cmd->add_option("--method-b", o->method_b, "Method filter when --b is an items report");
  cmd->add_option("--out", o->out, "Also write a report (.csv or .json)");
  cmd->callback([o, &ctx] {
    const eval::TTestResult r =
        eval::paired_t_test_one_tailed(eval::load_scores(o->a, o->method_a), eval::load_scores(o->b, o->method_b));
    char buf[160];
    std::snprintf(buf, sizeof buf, "t %.6g\ndf %d\np %.6g\n", r.t_statistic, r.degrees_of_freedom, r.p_value);
    ctx.out << buf;
    if (!o->out.empty()) eval::emit_report(r, o->out, {{"a", o->a}, {"b", o->b}, {"tail", "upper"}});
  });
}

void add_serve(CLI::App& app, Context& ctx) {
  auto* cmd = app.add_subcommand("serve", "Run the listening-test service");
  struct Opts {
    std::string manifest, models, data = "listen-data", host = "127.0.0.1", vocoder_config;
    int port = 8080;
    std::vector<std::string> methods = {"noisy", "mmse", "ddae", "fcn"};
    std::vector<std::string> noises = {"engine", "street"};
  };
  auto o = std::make_shared<Opts>();
  cmd->add_option("--manifest", o->manifest, "Corpus manifest")->required();
  cmd->add_option("--models", o->models, "Directory holding fcn.easm / ddae.easm");
  cmd->add_option("--port", o->port, "TCP port");
  cmd->add_option("--host", o->host, "Bind address");
  cmd->add_option("--data", o->data, "Session logs and stimulus cache");
  cmd->add_option("--vocoder-config", o->vocoder_config, "JSON vocoder settings");
  cmd->add_option("--methods", o->methods, "Conditions' methods")->delimiter(',');
  cmd->add_option("--noises", o->noises, "Conditions' noises")->delimiter(',');
  cmd->callback([o, &ctx] {
    listen::ListenConfig lc;
    lc.methods = o->methods;
    lc.noises = o->noises;
    listen::ListenService service(
        o->data, eval::load_manifest(o->manifest), load_resources(o->models, {}, {}, {}),
        o->vocoder_config.empty() ? vocoder::EasVocoderConfig{} : vocoder::load_vocoder_config(o->vocoder_config),
        lc);
    listen::HttpServer server(service);
    ctx.err << "listening on http://" << o->host << ":" << o->port << "\n";
    if (!server.listen(o->host, o->port)) throw IoError("cannot bind " + o->host + ":" + std::to_string(o->port));
  });
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  Context ctx{out, err};
  CLI::App app{"Speech enhancement and EAS simulation lab", "easlab"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string("easlab ") + EASLAB_VERSION + " (weights format " +
                                        std::to_string(nn::kWeightsFormatVersion) + ")");
  app.add_flag("-v,--verbose", ctx.verbose, "Progress on the error stream");
  add_mix(app, ctx);
  add_enhance(app, ctx);
  add_vocode(app, ctx);
  add_stoi(app, ctx);
  add_train(app, ctx);
  add_evaluate(app, ctx);
  add_ttest(app, ctx);
  add_serve(app, ctx);

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  try {
    app.parse(reversed);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForAllHelp& e) {
    return app.exit(e, out, err);
  } catch (const CLI::CallForVersion& e) {
    return app.exit(e, out, err);
  } catch (const CLI::ParseError& e) {
    app.exit(e, err, err);
    return 1;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

int run(int argc, char** argv) {
  std::vector<std::string> args(argv + 1, argv + argc);
  return run(args, std::cout, std::cerr);
}

}  // namespace easlab::cli
