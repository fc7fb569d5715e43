#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "cli.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using fso_relay::cli::run;

namespace {

struct Result {
    int code;
    std::string out;
    std::string err;
};

Result invoke(std::vector<std::string> args) {
    args.insert(args.begin(), "fso_relay");
    std::ostringstream out, err;
    const int code = run(args, out, err);
    return {code, out.str(), err.str()};
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

std::vector<std::string> lines(const std::string& text) {
    std::vector<std::string> v;
    std::istringstream in(text);
    for (std::string line; std::getline(in, line);) v.push_back(line);
    return v;
}

class CliTest : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("fso_relay_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    std::string write_config(const std::string& text) const {
        const auto p = path("config.json");
        std::ofstream(p) << text;
        return p;
    }

    fs::path dir_;
};

} // namespace

TEST_F(CliTest, LinkBudgetReport) {
    const auto r = invoke({"link-budget", "--distances", "1850"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(r.out);
    EXPECT_EQ(l[0], "hop,distance_m,xi_per_m,path_loss,rytov_var,mu_l,sigma2_l");
    EXPECT_EQ(l[1].substr(0, 17), "1,1.85000000e+03,");
    EXPECT_NE(l[1].find(",3.29929952e-03,6.15001458e-02,"), std::string::npos) << l[1];
    EXPECT_NE(r.out.find("sigma2_th,1.61279643e+06"), std::string::npos);
    EXPECT_NE(r.out.find("m_s,1.23776020e+07"), std::string::npos);
}

TEST_F(CliTest, LinkBudgetWithoutTurbulence) {
    const auto cfg = write_config(R"({"cn2": 0})");
    const auto r = invoke({"--config", cfg, "link-budget"});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(r.out);
    for (int k = 1; k <= 3; ++k) EXPECT_NE(l[k].find(",0.00000000e+00,"), std::string::npos) << l[k];
}

TEST_F(CliTest, StrongTurbulenceWarns) {
    const auto cfg = write_config(R"({"cn2": 1e-12})");
    const auto r = invoke({"--config", cfg, "link-budget"});
    EXPECT_EQ(r.code, 0);
    EXPECT_NE(r.err.find("warning"), std::string::npos);
}

TEST_F(CliTest, SnrReport) {
    const auto r = invoke({"snr", "--mode", "composed"});
    ASSERT_EQ(r.code, 0) << r.err;
    EXPECT_NE(r.out.find("g1,2.88559273e+02"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("snr,3.97785146e+02"), std::string::npos) << r.out;
    EXPECT_NE(r.out.find("term9,"), std::string::npos);
}

TEST_F(CliTest, CapacityWritesCsvAndManifest) {
    const auto out = path("cap.csv");
    const auto r = invoke({"capacity", "--samples", "2000", "--seed", "7", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(slurp(out));
    ASSERT_EQ(l.size(), 2u);
    EXPECT_EQ(l[0], "d_sr_m,d_rr_m,d_rd_m,mode,capacity_bits,std_error,capacity_bps,n_samples");
    const auto manifest = nlohmann::json::parse(slurp(out + ".manifest.json"));
    EXPECT_EQ(manifest["subcommand"], "capacity");
    EXPECT_EQ(manifest["seed"], 7);
    EXPECT_EQ(manifest["mode"], "composed");
    EXPECT_EQ(manifest["arguments"]["samples"], 2000);
    EXPECT_TRUE(manifest.contains("wall_clock_s"));
    EXPECT_FALSE(fs::exists(out + ".tmp"));
}

TEST_F(CliTest, SweepIsByteIdenticalAcrossRunsAndThreads) {
    const auto a = path("a.csv"), b = path("b.csv");
    ASSERT_EQ(invoke({"sweep", "--step", "500", "--samples", "500", "--threads", "1", "--out", a}).code, 0);
    ASSERT_EQ(invoke({"sweep", "--step", "500", "--samples", "500", "--threads", "3", "--out", b}).code, 0);
    const auto text = slurp(a);
    EXPECT_EQ(text, slurp(b));
    const auto l = lines(text);
    EXPECT_EQ(l[0], "d_sr_m,d_rr_m,d_rd_m,capacity_bits,std_error");
    EXPECT_EQ(l.size(), 1u + 36u + 1u);  // header, grid, optimum

    // The last row repeats the best grid row.
    double best = -1;
    std::string best_row;
    for (std::size_t k = 1; k + 1 < l.size(); ++k) {
        std::istringstream row(l[k]);
        std::string cell;
        for (int c = 0; c < 4; ++c) std::getline(row, cell, ',');
        if (std::stod(cell) > best) {
            best = std::stod(cell);
            best_row = l[k];
        }
    }
    EXPECT_EQ(l.back(), best_row);
}

TEST_F(CliTest, ManifestReproducesOutput) {
    const auto first = path("first.csv");
    ASSERT_EQ(invoke({"sweep", "--step", "1000", "--samples", "300", "--pb", "1e-9", "--seed", "5", "--out", first})
                  .code,
              0);
    const auto manifest = nlohmann::json::parse(slurp(first + ".manifest.json"));
    const auto cfg = write_config(manifest["params"].dump());
    const auto second = path("second.csv");
    ASSERT_EQ(invoke({"--config", cfg, "--seed", std::to_string(manifest["seed"].get<int>()), "--mode",
                      manifest["mode"].get<std::string>(), "sweep", "--step", "1000", "--samples", "300", "--out",
                      second})
                  .code,
              0);
    EXPECT_EQ(slurp(first), slurp(second));
}

TEST_F(CliTest, ThreadEnvironmentOverride) {
    const auto a = path("a.csv"), b = path("b.csv");
    ::setenv("FSO_RELAY_THREADS", "2", 1);
    const auto ra = invoke({"sweep", "--step", "1000", "--samples", "300", "--out", a});
    ::setenv("FSO_RELAY_THREADS", "bogus", 1);
    const auto rb = invoke({"sweep", "--step", "1000", "--samples", "300", "--out", b});
    ::unsetenv("FSO_RELAY_THREADS");
    EXPECT_EQ(ra.code, 0);
    EXPECT_EQ(rb.code, 2);
    EXPECT_FALSE(fs::exists(b));
}

TEST_F(CliTest, ValidateRowsAndOrdering) {
    const auto out = path("v.csv");
    const auto r = invoke({"validate", "--pb-list", "5e-9,1e-10", "--mode-list", "thermal,composed,low-bg",
                           "--drd-step", "1000", "--samples", "1000", "--out", out});
    ASSERT_EQ(r.code, 0) << r.err;
    const auto l = lines(slurp(out));
    EXPECT_EQ(l[0], "d_rd_m,p_b_w,mode,capacity_bits,std_error");
    ASSERT_EQ(l.size(), 1u + 2 * 4 * 3);
    EXPECT_EQ(l[1].substr(0, 39), "1.00000000e+03,1.00000000e-10,composed,");
    EXPECT_NE(l[2].find(",low-bg,"), std::string::npos);
    EXPECT_NE(l[3].find(",thermal,"), std::string::npos);
    EXPECT_NE(l[13].find("5.00000000e-09"), std::string::npos);
    for (std::size_t k = 1; k < l.size(); k += 3) {
        auto cap = [&](std::size_t i) {
            std::istringstream row(l[i]);
            std::string cell;
            for (int c = 0; c < 4; ++c) std::getline(row, cell, ',');
            return std::stod(cell);
        };
        EXPECT_LE(cap(k), cap(k + 1));
        EXPECT_LE(cap(k + 1), cap(k + 2));
    }
}

TEST_F(CliTest, ExitCodes) {
    EXPECT_EQ(invoke({}).code, 2);
    EXPECT_EQ(invoke({"sweep", "--bogus"}).code, 2);
    EXPECT_EQ(invoke({"--mode", "exact", "snr"}).code, 2);
    EXPECT_EQ(invoke({"--config", path("missing.json"), "snr"}).code, 2);

    const auto cfg = write_config(R"({"dof": 0})");
    const auto out = path("never.csv");
    const auto r = invoke({"--config", cfg, "sweep", "--out", out});
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.err.find("dof"), std::string::npos);
    EXPECT_FALSE(fs::exists(out));

    const auto empty = invoke({"sweep", "--step", "2000", "--samples", "100", "--out", out});
    EXPECT_EQ(empty.code, 3);
    EXPECT_FALSE(fs::exists(out));

    EXPECT_EQ(invoke({"capacity", "--distances", "1000,1000,1000"}).code, 3);
    EXPECT_EQ(invoke({"--help"}).code, 0);
}

TEST(CliBinary, RunsAsProcess) {
    const std::string cmd = std::string(FSO_RELAY_CLI_PATH) + " link-budget > /dev/null";
    EXPECT_EQ(std::system(cmd.c_str()), 0);
}
