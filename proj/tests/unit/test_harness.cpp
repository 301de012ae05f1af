#include <filesystem>
#include <fstream>
#include <sstream>

#include <doctest.h>

#include "fmala/harness.hpp"

using namespace fmala;
namespace fs = std::filesystem;

namespace {

const std::string kData = FMALA_TEST_DATA_DIR;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("fmala_test_" + name);
  fs::remove_all(p);
  return p;
}

ExperimentConfig small_config() {
  return config_from_json(nlohmann::json::parse(R"({
    "target": {"name": "standard_normal", "dim": 2},
    "sampler": {"name": "fisher_mala"},
    "burn_in": 1000, "collect": 1000, "replicates": 1, "base_seed": 5
  })"));
}

}  // namespace

TEST_CASE("config defaults follow the benchmark protocol") {
  const ExperimentConfig c = config_from_json(nlohmann::json::parse(R"({"sampler": {}})"));
  CHECK(c.target.name == "gp");
  CHECK(c.burn_in == 20000);
  CHECK(c.collect == 20000);
  CHECK(c.replicates == 10);
  REQUIRE(c.samplers.size() == 1);
  const SamplerSpec& s = c.samplers[0];
  CHECK(s.name == "fisher_mala");
  CHECK(s.lambda == 10.0);
  CHECK(s.rho == 0.015);
  CHECK(s.resolved_target_rate() == 0.574);
  CHECK(s.init_iters == 500);
  CHECK(s.signal == "rb");
  SamplerSpec hmc;
  hmc.name = "hmc";
  CHECK(hmc.resolved_target_rate() == 0.651);
  CHECK(hmc.leapfrog_steps == 10);
}

TEST_CASE("config validation") {
  auto bad = [](const char* text) {
    CHECK_THROWS_AS(config_from_json(nlohmann::json::parse(text)), ConfigError);
  };
  bad(R"({"sampler": {"name": "nuts"}})");
  bad(R"({"sampler": {"init_iters": 600}, "burn_in": 500})");
  bad(R"({"sampler": {}, "replicates": 0})");
  bad(R"({"sampler": {}, "collect": 10})");
  bad(R"({"sampler": {}, "colect": 1000})");
  bad(R"({"sampler": {"lamda": 1}})");
  bad(R"({"sampler": {"signal": "rao"}})");
  bad(R"({"target": {"name": "csv"}, "sampler": {}})");
  bad(R"({"target": {"name": "standard_normal"}, "sampler": {}})");
  bad(R"({"target": "gp"})");
  bad(R"({"sampler": {"lambda": "ten"}})");
  bad(R"([1, 2])");
  CHECK_THROWS_AS(load_config(kData + "/does_not_exist.json"), ConfigError);
}

TEST_CASE("config round-trips through JSON") {
  ExperimentConfig c = small_config();
  c.samplers.push_back(SamplerSpec{});
  c.samplers.back().name = "hmc";
  c.samplers.back().label = "HMC-5";
  c.samplers.back().leapfrog_steps = 5;
  const ExperimentConfig back = config_from_json(to_json(c));
  CHECK(to_json(back) == to_json(c));
  const nlohmann::json wrapped = {{"config", to_json(c)}, {"metadata", {{"x", 1}}}};
  CHECK(to_json(config_from_json(wrapped)) == to_json(c));
}

TEST_CASE("target construction") {
  TargetSpec t;
  t.name = "gp";
  CHECK(make_target(t)->dim() == 100);
  t.name = "inhomogeneous";
  CHECK(make_target(t)->name() == "inhomogeneous");
  t.name = "synthetic_logistic";
  CHECK(make_target(t)->dim() == 20);
  t.name = "csv";
  t.path = kData + "/toy.csv";
  t.label = "label";
  t.add_bias = true;
  CHECK(make_target(t)->dim() == 3);
  t.label = "2";
  CHECK(make_target(t)->dim() == 3);
  t.path = kData + "/multiclass.csv";
  t.label = "y";
  CHECK_THROWS_AS(make_target(t), TargetError);
  t.path = kData + "/missing.csv";
  CHECK_THROWS_AS(make_target(t), TargetError);
}

TEST_CASE("smoke run: standard normal, one replicate") {
  const ExperimentResult r = run_experiment(small_config(), 1);
  REQUIRE(r.samplers.size() == 1);
  const ReplicateResult& rep = r.samplers[0].replicates.at(0);
  CHECK(rep.collect_acceptance >= 0.4);
  CHECK(rep.collect_acceptance <= 0.75);
  CHECK(rep.ess.per_dim.size() == 2);
  CHECK(rep.trace.size() == 10);
  CHECK(rep.trace.has_frobenius());
  const fs::path out = scratch("smoke");
  emit_results(r, out.string());
  for (const char* f : {"ess.csv", "ess_summary.csv", "trace.csv", "parameters.csv", "run.json"}) {
    CHECK(fs::exists(out / f));
  }
  fs::remove_all(out);
}

TEST_CASE("adapted parameters do not change after freeze") {
  ExperimentConfig c = small_config();
  c.samplers.clear();
  for (const char* name : {"mala", "fisher_mala", "ada_mala", "mmala", "hmc"}) {
    SamplerSpec s;
    s.name = name;
    c.samplers.push_back(s);
  }
  c.samplers.back().label = "hmc-check";
  c.replicates = 2;
  const ExperimentResult r = run_experiment(c, 2);
  for (const auto& s : r.samplers) {
    for (const auto& rep : s.replicates) {
      CAPTURE(s.display_name);
      CHECK(rep.at_freeze == rep.at_end);
      CHECK(rep.at_freeze.sigma2 > 0.0);
    }
  }
}

TEST_CASE("outputs are byte-identical across runs and thread counts") {
  ExperimentConfig c = small_config();
  c.replicates = 3;
  c.samplers.push_back(SamplerSpec{});
  c.samplers.back().name = "ada_mala";
  c.save_chains = true;
  const fs::path a = scratch("det_a"), b = scratch("det_b");
  emit_results(run_experiment(c, 1), a.string());
  emit_results(run_experiment(c, 3), b.string());
  for (const char* f : {"ess.csv", "ess_summary.csv", "trace.csv", "parameters.csv",
                        "chains/FisherMALA_2.csv", "chains/AdaMALA_0.csv"}) {
    CAPTURE(f);
    CHECK(slurp(a / f) == slurp(b / f));
    CHECK(!slurp(a / f).empty());
  }
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("re-running from run.json reproduces the outputs") {
  ExperimentConfig c = small_config();
  const fs::path a = scratch("rt_a"), b = scratch("rt_b");
  emit_results(run_experiment(c, 1), a.string());
  const ExperimentConfig again = load_config((a / "run.json").string());
  emit_results(run_experiment(again, 1), b.string());
  for (const char* f : {"ess.csv", "ess_summary.csv", "trace.csv", "parameters.csv"}) {
    CHECK(slurp(a / f) == slurp(b / f));
  }
  const auto run = nlohmann::json::parse(slurp(a / "run.json"));
  CHECK(run.at("metadata").contains("timestamp"));
  CHECK(run.at("metadata").at("seeds").size() == 1);
  fs::remove_all(a);
  fs::remove_all(b);
}

TEST_CASE("logistic targets: mMALA not reproduced, no Frobenius column") {
  ExperimentConfig c = config_from_json(nlohmann::json::parse(R"({
    "target": {"name": "csv", "path": ")" + kData + R"(/toy.csv", "label": "label"},
    "samplers": ["mala", "mmala"],
    "burn_in": 600, "collect": 200, "replicates": 2
  })"));
  const ExperimentResult r = run_experiment(c, 1);
  CHECK(!r.has_reference_covariance);
  CHECK(r.samplers[0].reproduced);
  CHECK(!r.samplers[1].reproduced);
  const fs::path out = scratch("logistic");
  emit_results(r, out.string());
  const std::string trace = slurp(out / "trace.csv");
  CHECK(trace.rfind("sampler,replicate,iteration,log_target,running_acceptance\n", 0) == 0);
  const std::string summary = slurp(out / "ess_summary.csv");
  CHECK(summary.find("mmala,toy.csv,0,not-reproduced") != std::string::npos);
  fs::remove_all(out);
}

TEST_CASE("unwritable output directory") {
  const ExperimentResult r = run_experiment(small_config(), 1);
  const fs::path file = scratch("blocker");
  std::ofstream(file) << "x";
  CHECK_THROWS_AS(emit_results(r, (file / "sub").string()), OutputError);
  fs::remove_all(file);
}

TEST_CASE("worker count honours the environment") {
  setenv("FMALA_THREADS", "3", 1);
  CHECK(worker_count() == 3);
  setenv("FMALA_THREADS", "junk", 1);
  CHECK(worker_count() >= 1);
  unsetenv("FMALA_THREADS");
}
