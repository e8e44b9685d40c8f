/*
 * Copyright 2026 The dpdice Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "dpdice/bench.hpp"
#include "dpdice/dpnoise.hpp"
#include "dpdice/mpc.hpp"
#include "dpdice/protocol.hpp"
#include "dpdice/transport.hpp"

namespace {

using namespace dpdice;

uint64_t env_seed_or(uint64_t fallback) {
  const char* s = std::getenv("DPDICE_SEED");
  if (s == nullptr || *s == '\0') return fallback;
  return std::strtoull(s, nullptr, 10);
}

bench::SketchKind parse_kind(const std::string& name) {
  if (name == "fms") return bench::SketchKind::FMS;
  if (name == "fm") return bench::SketchKind::FM;
  if (name == "hll") return bench::SketchKind::HLL;
  if (name == "loglog") return bench::SketchKind::LOGLOG;
  throw CLI::ValidationError("--kind", "expected fms|fm|hll|loglog");
}

// "1e6,2e4" -> {1000000, 20000}; scientific notation accepted.
std::vector<uint64_t> parse_n_list(const std::string& text) {
  std::vector<uint64_t> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    out.push_back(uint64_t(std::llround(std::stod(item))));
  }
  if (out.empty()) throw CLI::ValidationError("--n", "empty list");
  return out;
}

int run_bench(const std::string& kinds, const std::string& n_list, uint32_t m,
              uint32_t w, uint32_t trials, uint64_t seed,
              bench::PrivacyMode mode, double eps, double delta, uint32_t d) {
  std::cout << bench::csv_header() << "\n";
  std::stringstream ks(kinds);
  std::string kind_name;
  while (std::getline(ks, kind_name, ',')) {
    for (uint64_t n : parse_n_list(n_list)) {
      bench::ExperimentSpec spec;
      spec.kind = parse_kind(kind_name);
      spec.n = n;
      spec.m = m;
      spec.w = w;
      spec.mode = mode;
      spec.eps = eps;
      spec.delta = delta;
      spec.d = d;
      spec.trials = trials;
      spec.seed = seed;
      std::cout << bench::csv_row(spec, bench::run_experiment(spec)) << "\n";
    }
  }
  return 0;
}

void apply_config_key(protocol::ProtocolConfig& config, const std::string& key,
                      const std::string& value) {
  if (key == "m") {
    config.m = uint32_t(std::stoul(value));
  } else if (key == "w") {
    config.w = uint32_t(std::stoul(value));
  } else if (key == "d") {
    config.d = uint32_t(std::stoul(value));
  } else if (key == "c") {
    config.c = uint32_t(std::stoul(value));
  } else if (key == "sigma") {
    config.sigma = std::stod(value);
  } else if (key == "hash_seed") {
    config.hash_seed = std::stoull(value);
  } else if (key == "dealer_seed") {
    config.dealer_seed = std::stoull(value);
  } else if (key == "noise_seed") {
    config.noise_seed = std::stoull(value);
  } else if (key == "session_seed") {
    config.session = wire::SessionId::from_seed(std::stoull(value));
  } else {
    throw CLI::ValidationError("--config", "unknown key: " + key);
  }
}

void load_config_file(protocol::ProtocolConfig& config,
                      const std::string& path) {
  std::ifstream in(path);
  if (!in) throw CLI::ValidationError("--config", "cannot open " + path);
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ValidationError("--config", "expected key=value: " + line);
    }
    apply_config_key(config, line.substr(0, eq), line.substr(eq + 1));
  }
}

void print_transcript(const protocol::RunTranscript& t,
                      const protocol::ProtocolConfig& config) {
  std::printf("revealed_noisy_z: %lld\n", (long long)t.revealed_noisy_z);
  std::printf("estimate: %.2f\n", t.estimate.n_hat);
  std::printf("rounds: zero_test=%u reveal=%u\n", t.zero_test_rounds,
              t.reveal_rounds);
  std::printf("material_per_cp: rand=%llu rand2=%llu exp_chains=%llu "
              "triples=%llu\n",
              (unsigned long long)t.material.rand,
              (unsigned long long)t.material.rand2_bundles,
              (unsigned long long)t.material.exp_chains,
              (unsigned long long)t.material.triples);
  for (size_t id = 0; id < t.bytes_sent.size(); ++id) {
    const char* role = id < config.d ? "dh" : "cp";
    const size_t idx = id < config.d ? id : id - config.d;
    std::printf("bytes_sent[%s%zu]: %llu\n", role, idx,
                (unsigned long long)t.bytes_sent[id]);
  }
  for (const auto& [phase, seconds] : t.phase_seconds) {
    std::printf("phase_seconds[%s]: %.3f\n", phase.c_str(), seconds);
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"FMS sketching, discrete-Gaussian DP and the distributed "
               "cardinality protocol"};
  app.require_subcommand(1);

  // Shared bench flags.
  struct BenchFlags {
    std::string kind = "fms";
    std::string n = "1e6";
    uint32_t m = 4096;
    uint32_t w = 0;
    uint32_t trials = 100;
    uint64_t seed = env_seed_or(1);
    double eps = 0.1;
    double delta = 1e-12;
    uint32_t d = 20;
  };

  BenchFlags sb, db, ddb;
  auto add_bench_flags = [](CLI::App* cmd, BenchFlags& f) {
    cmd->add_option("--kind", f.kind, "fms|fm|hll|loglog, comma separated");
    cmd->add_option("--n", f.n, "cardinalities, comma separated");
    cmd->add_option("--m", f.m, "number of arrays / registers");
    cmd->add_option("--w", f.w, "array width (0 = width rule)");
    cmd->add_option("--trials", f.trials, "Monte Carlo trials");
    cmd->add_option("--seed", f.seed, "base seed");
  };

  auto* sketch_bench =
      app.add_subcommand("sketch-bench", "noise-free sketch accuracy (CSV)");
  add_bench_flags(sketch_bench, sb);

  auto* dp_bench = app.add_subcommand(
      "dp-bench", "central Gaussian baseline accuracy (CSV)");
  add_bench_flags(dp_bench, db);
  dp_bench->add_option("--eps", db.eps, "DP epsilon");
  dp_bench->add_option("--delta", db.delta, "DP delta");

  auto* ddp_bench = app.add_subcommand(
      "ddp-bench", "distributed discrete-Gaussian accuracy (CSV)");
  add_bench_flags(ddp_bench, ddb);
  ddp_bench->add_option("--eps", ddb.eps, "DP epsilon");
  ddp_bench->add_option("--delta", ddb.delta, "DP delta");
  ddp_bench->add_option("--d", ddb.d, "noise contributors");

  // calibrate
  std::string cal_eps = "0.1";
  double cal_delta = 1e-12;
  uint32_t cal_d = 20;
  auto* calibrate =
      app.add_subcommand("calibrate", "per-contributor sigma for DP targets");
  calibrate->add_option("--eps", cal_eps, "target epsilons, comma separated");
  calibrate->add_option("--delta", cal_delta, "DP delta");
  calibrate->add_option("--d", cal_d, "noise contributors");

  // protocol-run
  protocol::ProtocolConfig config;
  bool demo = false;
  std::string role, config_path, material_path, listen_addr;
  std::vector<std::string> connect_addrs;
  std::string transport_name = "mem";
  uint32_t party_index = 0;
  uint64_t run_n = 1'000'000;
  double run_eps = 0.1, run_delta = 1e-12, run_overlap = 0.2;
  double sigma_override = 0.0;
  uint64_t run_seed = env_seed_or(1);
  auto* protocol_run =
      app.add_subcommand("protocol-run", "run the multi-party session");
  protocol_run->add_flag("--demo", demo, "host every party on threads");
  protocol_run->add_option("--role", role, "dh|cp (one party per process)");
  protocol_run->add_option("--index", party_index, "party index within role");
  protocol_run->add_option("--listen", listen_addr, "own host:port");
  protocol_run->add_option("--connect", connect_addrs,
                           "peer as id=host:port, repeatable");
  protocol_run->add_option("--transport", transport_name, "mem|tcp");
  protocol_run->add_option("--config", config_path, "key=value config file");
  protocol_run->add_option("--material", material_path,
                           "dealer material file (cp role)");
  protocol_run->add_option("--d", config.d, "data holders");
  protocol_run->add_option("--c", config.c, "computation parties");
  protocol_run->add_option("--m", config.m, "arrays");
  protocol_run->add_option("--w", config.w, "array width");
  protocol_run->add_option("--n", run_n, "union cardinality (demo/dh)");
  protocol_run->add_option("--eps", run_eps, "DP epsilon for calibration");
  protocol_run->add_option("--delta", run_delta, "DP delta");
  protocol_run->add_option("--sigma", sigma_override,
                           "per-DH noise scale (overrides calibration)");
  protocol_run->add_option("--overlap", run_overlap,
                           "fraction of elements held by two DHs");
  protocol_run->add_option("--seed", run_seed, "set/session seed");

  // dealer-gen
  protocol::ProtocolConfig gen_config;
  std::string gen_out = ".";
  auto* dealer_gen =
      app.add_subcommand("dealer-gen", "write per-CP dealer material files");
  dealer_gen->add_option("--d", gen_config.d, "data holders");
  dealer_gen->add_option("--c", gen_config.c, "computation parties");
  dealer_gen->add_option("--m", gen_config.m, "arrays");
  dealer_gen->add_option("--w", gen_config.w, "array width");
  dealer_gen->add_option("--dealer-seed", gen_config.dealer_seed,
                         "material seed");
  dealer_gen->add_option("--out", gen_out, "output directory");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 1;
  }

  try {
    if (sketch_bench->parsed()) {
      return run_bench(sb.kind, sb.n, sb.m, sb.w, sb.trials, sb.seed,
                       bench::PrivacyMode::NONE, sb.eps, sb.delta, sb.d);
    }
    if (dp_bench->parsed()) {
      return run_bench(db.kind, db.n, db.m, db.w, db.trials, db.seed,
                       bench::PrivacyMode::CENTRAL_GAUSS, db.eps, db.delta,
                       db.d);
    }
    if (ddp_bench->parsed()) {
      return run_bench(ddb.kind, ddb.n, ddb.m, ddb.w, ddb.trials, ddb.seed,
                       bench::PrivacyMode::DISTRIBUTED_DISCRETE, ddb.eps,
                       ddb.delta, ddb.d);
    }
    if (calibrate->parsed()) {
      std::printf("%10s %10s %6s %10s %10s\n", "eps", "delta", "d", "eps_d",
                  "sigma");
      std::stringstream ss(cal_eps);
      std::string item;
      while (std::getline(ss, item, ',')) {
        const PrivacyBudget budget =
            calibrate_sigma(std::stod(item), cal_delta, cal_d);
        std::printf("%10.4f %10.2e %6u %10.4f %10.3f\n", budget.eps_dp,
                    budget.delta, budget.d, budget.eps_cdp, budget.sigma);
      }
      return 0;
    }
    if (dealer_gen->parsed()) {
      gen_config.validate();
      const auto materials = protocol::offline_prepare(gen_config);
      std::filesystem::create_directories(gen_out);
      for (uint32_t k = 0; k < gen_config.c; ++k) {
        const std::string path =
            gen_out + "/cp" + std::to_string(k) + ".material";
        std::ofstream out(path, std::ios::binary);
        mpc::write_material(out, materials[k]);
        const auto counts = materials[k].counts();
        std::printf("%s: rand=%llu rand2=%llu exp_chains=%llu triples=%llu\n",
                    path.c_str(), (unsigned long long)counts.rand,
                    (unsigned long long)counts.rand2_bundles,
                    (unsigned long long)counts.exp_chains,
                    (unsigned long long)counts.triples);
      }
      return 0;
    }

    // protocol-run
    if (!config_path.empty()) load_config_file(config, config_path);
    if (sigma_override > 0.0) {
      config.sigma = sigma_override;
    } else if (protocol_run->count("--eps") > 0 ||
               protocol_run->count("--delta") > 0) {
      config.sigma = calibrate_sigma(run_eps, run_delta, config.d).sigma;
    }
    config.session = wire::SessionId::from_seed(run_seed);
    config.validate();

    if (demo) {
      const auto sets =
          bench::gen_union_partition(run_n, config.d, run_overlap, run_seed);
      const auto transcript = protocol::run_protocol(config, sets);
      print_transcript(transcript, config);
      return 0;
    }

    if (role != "dh" && role != "cp") {
      std::cerr << "protocol-run: need --demo or --role dh|cp\n";
      return 1;
    }
    if (transport_name != "tcp") {
      std::cerr << "protocol-run: role mode requires --transport tcp\n";
      return 1;
    }
    const uint16_t self = role == "dh" ? config.dh_id(party_index)
                                       : config.cp_id(party_index);
    std::vector<std::string> endpoints(config.d + config.c);
    if (!listen_addr.empty()) endpoints[self] = listen_addr;
    for (const std::string& peer : connect_addrs) {
      auto eq = peer.find('=');
      if (eq == std::string::npos) {
        std::cerr << "protocol-run: --connect expects id=host:port\n";
        return 1;
      }
      endpoints[uint16_t(std::stoul(peer.substr(0, eq)))] =
          peer.substr(eq + 1);
    }
    for (size_t id = 0; id < endpoints.size(); ++id) {
      if (endpoints[id].empty()) {
        std::cerr << "protocol-run: no endpoint for party " << id << "\n";
        return 1;
      }
    }
    auto transport = transport::TcpTransport::connect_mesh(self, endpoints);

    if (role == "dh") {
      // Each DH holds a deterministic slice of the demo universe.
      const auto sets =
          bench::gen_union_partition(run_n, config.d, run_overlap, run_seed);
      protocol::run_dh(config, party_index, sets[party_index], *transport);
      std::printf("dh%u: done\n", party_index);
      return 0;
    }
    if (material_path.empty()) {
      std::cerr << "protocol-run: cp role requires --material\n";
      return 1;
    }
    std::ifstream min(material_path, std::ios::binary);
    if (!min) {
      std::cerr << "protocol-run: cannot open " << material_path << "\n";
      return 1;
    }
    mpc::PartyMaterial material = mpc::read_material(min);
    const Field field(config.field);
    const auto phi = mpc::LookupPolynomial::interpolate(
        field, uint32_t(config.field.bit_length()));
    const auto result =
        protocol::run_cp(config, party_index, std::move(material), phi,
                         *transport);
    std::printf("cp%u: revealed_noisy_z=%lld estimate=%.2f\n", party_index,
                (long long)result.revealed_noisy_z, result.estimate.n_hat);
    return 0;
  } catch (const CLI::ValidationError& e) {
    std::cerr << e.what() << "\n";
    return 1;
  } catch (const protocol::SessionAbort& e) {
    std::cerr << "session aborted in phase " << e.phase << ": " << e.what()
              << "\n";
    return 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "invalid arguments: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
}
