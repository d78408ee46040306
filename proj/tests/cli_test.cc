// Copyright 2026 The paircat-lab Authors
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

#include "cli.h"

#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "json.hpp"

using namespace paircat;
namespace fs = std::filesystem;

namespace {

struct TempDir {
    fs::path path;
    TempDir() {
        path = fs::temp_directory_path() / ("paircat-cli-test-" + std::to_string(::getpid()));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() {
        std::error_code ec;
        fs::remove_all(path, ec);
    }
};

int run(std::vector<std::string> args, std::string *err_text = nullptr) {
    args.insert(args.begin(), "paircat-lab");
    std::vector<const char *> argv;
    for (const auto &a : args) argv.push_back(a.c_str());
    std::ostringstream out, err;
    int code = cli::run((int)argv.size(), argv.data(), out, err);
    if (err_text) *err_text = err.str();
    return code;
}

std::string slurp(const fs::path &p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

}  // namespace

TEST(cli, expand_list_handles_values_and_ranges) {
    EXPECT_EQ(cli::expand_list("Z"), std::vector<std::string>{"Z"});
    EXPECT_EQ(cli::expand_list("a, b,c"), (std::vector<std::string>{"a", "b", "c"}));
    auto r = cli::expand_list("1:2:0.5");
    ASSERT_EQ(r.size(), 3u);
    EXPECT_DOUBLE_EQ(std::stod(r[0]), 1.0);
    EXPECT_DOUBLE_EQ(std::stod(r[1]), 1.5);
    EXPECT_DOUBLE_EQ(std::stod(r[2]), 2.0);
    EXPECT_EQ(cli::expand_list("0.1:0.3:0.1").size(), 3u);
    EXPECT_EQ(cli::expand_list("0,1:2:1").size(), 3u);
    EXPECT_THROW(cli::expand_list("1:2"), std::invalid_argument);
    EXPECT_THROW(cli::expand_list("2:1:1"), std::invalid_argument);
    EXPECT_THROW(cli::expand_list("1:2:0"), std::invalid_argument);
    EXPECT_THROW(cli::expand_list("a,,b"), std::invalid_argument);
}

TEST(cli, read_config_parses_flat_files) {
    TempDir d;
    fs::path p = d.path / "run.cfg";
    std::ofstream(p) << "# comment\n gamma2 = 1,2 \n\nT=5  # trailing\n";
    auto cfg = cli::read_config(p.string());
    ASSERT_EQ(cfg.size(), 2u);
    EXPECT_EQ(cfg["gamma2"], "1,2");
    EXPECT_EQ(cfg["T"], "5");
    std::ofstream(p) << "no equals sign\n";
    EXPECT_THROW(cli::read_config(p.string()), std::invalid_argument);
    EXPECT_THROW(cli::read_config((d.path / "missing.cfg").string()), std::invalid_argument);
}

TEST(cli, invalid_input_exits_with_code_two) {
    TempDir d;
    std::string out = d.path.string(), err;
    EXPECT_EQ(run({"predict", "--out", out, "--set", "bogus=1"}, &err), 2);
    EXPECT_NE(err.find("unknown key"), std::string::npos);
    EXPECT_EQ(run({"predict", "--out", out, "--set", "gamma2=1:2"}), 2);
    EXPECT_EQ(run({"predict", "--out", out, "--set", "noequals"}), 2);
    EXPECT_EQ(run({"no-such-command"}), 2);
    EXPECT_EQ(run({}), 2);
    auto m = nlohmann::json::parse(slurp(d.path / "predict.manifest.json"));
    EXPECT_EQ(m["status"], "invalid");
}

TEST(cli, predict_writes_csv_and_manifest) {
    TempDir d;
    ASSERT_EQ(run({"predict", "--out", d.path.string(), "--set", "gate=Z,ZZ", "--set", "gamma2=2,4"}), 0);
    std::string csv = slurp(d.path / "predict.csv");
    int totals = 0;
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    EXPECT_EQ(line, "# paircat-lab predict");
    while (std::getline(in, line)) {
        if (line.find(",total,") != std::string::npos) totals++;
    }
    EXPECT_EQ(totals, 4);  // one per grid point
    auto m = nlohmann::json::parse(slurp(d.path / "predict.manifest.json"));
    EXPECT_EQ(m["status"], "ok");
    EXPECT_EQ(m["runs_completed"], 4);
    EXPECT_EQ(m["subcommand"], "predict");
}

TEST(cli, simulation_tables_report_truncation) {
    TempDir d;
    ASSERT_EQ(run({"gate-sim", "--out", d.path.string(), "--set", "gate=Z", "--set", "gamma2=2", "--set", "T=1"}), 0);
    std::string csv = slurp(d.path / "gate-sim.csv");
    EXPECT_NE(csv.find("n_max"), std::string::npos);
    EXPECT_NE(csv.find("tail_lost"), std::string::npos);
    EXPECT_NE(csv.find("tail_ok"), std::string::npos);
    auto m = nlohmann::json::parse(slurp(d.path / "gate-sim.manifest.json"));
    EXPECT_TRUE(m.contains("truncation"));
}
