// netdyn: command-line front end for the experiment runner.
//
//   netdyn validate <config>     parse and check a config against its data
//   netdyn run <config>          run it and write manifest.json next to the outputs
//   netdyn replay <manifest>     rerun a manifest's config and compare file hashes
//
// Exit status: 0 ok, 1 config error, 2 runtime error (including a replay
// whose outputs differ). NETDYN_WORKERS sets the worker count.

#include <openssl/evp.h>

#include <chrono>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "netdyn/experiment.hpp"
#include "netdyn/parallel.hpp"

#ifndef NETDYN_VERSION
#define NETDYN_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kRuntimeError = 2;

std::string sha256_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw netdyn::Error("cannot read " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::vector<char> buf(1 << 16);
  while (in) {
    in.read(buf.data(), static_cast<std::streamsize>(buf.size()));
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  EVP_DigestFinal_ex(ctx, digest, &len);
  EVP_MD_CTX_free(ctx);
  std::string hex;
  char byte[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(byte, sizeof byte, "%02x", digest[i]);
    hex += byte;
  }
  return hex;
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

// Runs the experiment into `dir`; returns the manifest it wrote.
json execute(const netdyn::ExperimentConfig& cfg, const fs::path& dir, std::size_t workers) {
  const std::string started = utc_now();
  const auto out = netdyn::run_experiment(cfg, dir, workers);
  json files = json::array();
  for (const auto& name : out.files) {
    files.push_back({{"file", name}, {"sha256", sha256_file(dir / name)}, {"bytes", fs::file_size(dir / name)}});
  }
  json manifest = {{"netdyn_version", NETDYN_VERSION},
                   {"config", netdyn::to_json(cfg)},
                   {"seed", cfg.seed},
                   {"derived_seeds", out.seeds},
                   {"started_at", started},
                   {"finished_at", utc_now()},
                   {"workers", workers},
                   {"outputs", files},
                   {"summary", out.summary}};
  std::ofstream f(dir / "manifest.json");
  f << manifest.dump(2) << '\n';
  if (!f) throw netdyn::Error("cannot write " + (dir / "manifest.json").string());
  return manifest;
}

// Config problems exit 1; anything raised once the experiment runs exits 2.
template <typename Prepare, typename Execute>
int guarded(Prepare&& prepare, Execute&& run) {
  try {
    prepare();
  } catch (const std::exception& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  }
  try {
    return run();
  } catch (const std::exception& e) {
    std::cerr << "runtime error: " << e.what() << '\n';
    return kRuntimeError;
  }
}

int cmd_validate(const std::string& path) {
  netdyn::ExperimentConfig cfg;
  return guarded(
      [&] {
        cfg = netdyn::load_config(path);
        netdyn::validate_experiment(cfg);
      },
      [&] {
        std::cout << to_json(cfg).dump(2) << '\n';
        return kOk;
      });
}

int cmd_run(const std::string& path, const std::string& output_override) {
  netdyn::ExperimentConfig cfg;
  return guarded(
      [&] {
        cfg = netdyn::load_config(path);
        if (!output_override.empty()) cfg.output_dir = fs::absolute(output_override).lexically_normal().string();
        if (cfg.output_dir.empty()) throw netdyn::ConfigError("output_dir: required for run");
        netdyn::validate_experiment(cfg);
      },
      [&] {
        const json m = execute(cfg, cfg.output_dir, netdyn::default_workers());
        for (const auto& f : m["outputs"]) std::cout << (fs::path(cfg.output_dir) / f["file"].get<std::string>()).string() << '\n';
        return kOk;
      });
}

int cmd_replay(const std::string& path, const std::string& output_override) {
  netdyn::ExperimentConfig cfg;
  json recorded;
  fs::path dir;
  return guarded(
      [&] {
        std::ifstream in(path);
        if (!in) throw netdyn::ConfigError("cannot open manifest " + path);
        recorded = json::parse(in);
        if (!recorded.contains("config") || !recorded.contains("outputs")) {
          throw netdyn::ConfigError(path + ": not a netdyn manifest");
        }
        cfg = netdyn::parse_config(recorded["config"], fs::absolute(path).parent_path());
        dir = output_override.empty() ? fs::absolute(path).parent_path() / "replay" : fs::absolute(output_override);
        if (fs::equivalent(fs::absolute(path).parent_path(), dir)) {
          throw netdyn::ConfigError("replay output directory must differ from the manifest's");
        }
        cfg.output_dir = dir.lexically_normal().string();
        netdyn::validate_experiment(cfg);
      },
      [&] {
        const json fresh = execute(cfg, dir, netdyn::default_workers());
        std::map<std::string, std::string> now;
        for (const auto& f : fresh["outputs"]) now[f["file"]] = f["sha256"];
        std::size_t mismatches = 0;
        for (const auto& f : recorded["outputs"]) {
          const std::string name = f["file"];
          const auto it = now.find(name);
          const bool same = it != now.end() && it->second == f["sha256"].get<std::string>();
          std::cout << (same ? "match    " : "MISMATCH ") << name << '\n';
          mismatches += !same;
          if (it != now.end()) now.erase(it);
        }
        for (const auto& [name, hash] : now) {
          std::cout << "EXTRA    " << name << '\n';
          ++mismatches;
        }
        if (mismatches) {
          std::cerr << "replay differs in " << mismatches << " file(s)\n";
          return kRuntimeError;
        }
        return kOk;
      });
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"netdyn: training dynamics of small sigmoid networks"};
  app.set_version_flag("--version", std::string(NETDYN_VERSION));
  app.require_subcommand(1);

  std::string config, manifest, output;
  auto* validate = app.add_subcommand("validate", "Check a config and its data without running");
  validate->add_option("config", config, "Experiment config (JSON)")->required();
  auto* run = app.add_subcommand("run", "Run an experiment and write its outputs and manifest.json");
  run->add_option("config", config, "Experiment config (JSON)")->required();
  run->add_option("-o,--output-dir", output, "Override output_dir from the config");
  auto* replay = app.add_subcommand("replay", "Rerun a manifest and compare output hashes");
  replay->add_option("manifest", manifest, "manifest.json written by run")->required();
  replay->add_option("-o,--output-dir", output, "Where to write the rerun (default: <manifest dir>/replay)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }
  if (*validate) return cmd_validate(config);
  if (*run) return cmd_run(config, output);
  return cmd_replay(manifest, output);
}
