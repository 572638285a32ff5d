#include "raln/data.hpp"

#include <gtest/gtest.h>
#include <json.hpp>
#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

namespace fs = std::filesystem;
using namespace raln;

namespace {

class Cli : public ::testing::Test {
protected:
    void SetUp() override {
        dir_ = fs::temp_directory_path() /
               ("raln_cli_" + std::string(::testing::UnitTest::GetInstance()->current_test_info()->name()));
        fs::remove_all(dir_);
        fs::create_directories(dir_);
    }
    void TearDown() override { fs::remove_all(dir_); }

    std::string path(const std::string& name) const { return (dir_ / name).string(); }

    int run(const std::string& args) const {
        const std::string cmd = std::string(RALN_CLI_PATH) + " " + args + " >" + path("log.txt") + " 2>&1";
        const int status = std::system(cmd.c_str());
        return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    }

    std::string slurp(const std::string& name) const {
        std::ifstream in(path(name), std::ios::binary);
        std::stringstream ss;
        ss << in.rdbuf();
        return ss.str();
    }

    void write(const std::string& name, const std::string& text) const { std::ofstream(path(name)) << text; }

    // Rows of a raln CSV keyed by column name.
    std::vector<std::map<std::string, std::string>> table(const std::string& name) const {
        std::istringstream in(slurp(name));
        std::string line;
        std::getline(in, line);
        EXPECT_EQ(line.rfind("# raln-csv v1 ", 0), 0u) << line;
        std::getline(in, line);
        auto cells = [](const std::string& l) {
            std::vector<std::string> out;
            std::stringstream ss(l);
            std::string c;
            while (std::getline(ss, c, ',')) out.push_back(c);
            return out;
        };
        const auto header = cells(line);
        std::vector<std::map<std::string, std::string>> rows;
        while (std::getline(in, line)) {
            const auto values = cells(line);
            std::map<std::string, std::string> row;
            for (std::size_t i = 0; i < header.size() && i < values.size(); ++i) row[header[i]] = values[i];
            rows.push_back(row);
        }
        return rows;
    }

    void gen(const std::string& out, const std::string& spec) const {
        write(out + ".json", spec);
        ASSERT_EQ(run("gen --spec " + path(out + ".json") + " --out " + path(out)), 0) << slurp("log.txt");
    }

    fs::path dir_;
};

const char* kPlanted = R"({"d": 16, "n": 400, "c": 3, "seed": 11,
  "spectrum": {"type": "exponential", "decay_rate": 0.3},
  "signal": {"type": "bottom_k", "k": 2, "snr": 3.0},
  "geometry": {"height": 4, "width": 4}})";

double num(const std::string& s) { return std::stod(s); }

}  // namespace

TEST_F(Cli, GenIsDeterministic) {
    gen("a.raln", kPlanted);
    gen("b.raln", kPlanted);
    EXPECT_EQ(slurp("a.raln"), slurp("b.raln"));
    const Dataset ds = load_container(path("a.raln"));
    EXPECT_EQ(ds.x.rows(), 16);
    EXPECT_EQ(ds.x.cols(), 400);
    const auto manifest = nlohmann::json::parse(slurp("a.raln.manifest.json"));
    EXPECT_EQ(manifest["config"]["spec"]["signal"]["type"], "bottom_k");
    EXPECT_EQ(manifest["outputs"][0]["sha256"].get<std::string>().size(), 64u);
}

TEST_F(Cli, GenSpectrumIsDescending) {
    gen("e.raln", R"({"d": 6, "n": 3000, "seed": 3, "spectrum": {"type": "exponential", "decay_rate": 0.5}})");
    const Matrix x = load_container(path("e.raln")).x.values();
    const Eigen::SelfAdjointEigenSolver<Matrix> es(x * x.transpose() / 3000.0);
    const Vector ev = es.eigenvalues().reverse();
    for (Index i = 1; i < ev.size(); ++i) EXPECT_LT(ev(i), ev(i - 1));
    EXPECT_NEAR(ev(0), 1.0, 0.1);
}

TEST_F(Cli, GenRejectsBadSpecs) {
    write("bad.json", R"({"d": 4, "n": 10, "spectrum": {"type": "exponential", "decay_rate": 0.1},
                          "signal": {"type": "bottom_k", "k": 4, "snr": 1}})");
    EXPECT_EQ(run("gen --spec " + path("bad.json") + " --out " + path("x.raln")), 2);
    EXPECT_FALSE(fs::exists(path("x.raln")));
    write("junk.json", "{not json");
    EXPECT_EQ(run("gen --spec " + path("junk.json") + " --out " + path("x.raln")), 2);
    write("extra.json", R"({"d": 4, "n": 10, "spectrum": {"type": "explicit", "values": [1]}})");
    EXPECT_EQ(run("gen --spec " + path("extra.json") + " --out " + path("x.raln")), 2);
}

TEST_F(Cli, AlignSweepOnAxisToyEndsAtOne) {
    Matrix x = Matrix::Zero(3, 6);
    for (Index j = 0; j < 6; ++j) x(j % 3, j) = 3.0 - static_cast<double>(j % 3);
    save_container(Dataset{DataMatrix(x), {0, 1, 2, 0, 1, 2}, 3, {}}, path("toy.raln"));
    ASSERT_EQ(run("align-sweep --data " + path("toy.raln") + " --out " + path("a.csv")), 0) << slurp("log.txt");
    const auto rows = table("a.csv");
    ASSERT_EQ(rows.size(), 3u);
    EXPECT_EQ(num(rows.back().at("alignment")), 1.0);
    EXPECT_EQ(num(rows.back().at("k_over_D")), 1.0);
}

TEST_F(Cli, AlignSweepVariantsAreMonotoneAndDiffer) {
    gen("d.raln", kPlanted);
    ASSERT_EQ(run("align-sweep --data " + path("d.raln") + " --variant gram --out " + path("g.csv")), 0);
    ASSERT_EQ(run("align-sweep --data " + path("d.raln") + " --variant proof --out " + path("p.csv")), 0);
    const auto g = table("g.csv"), p = table("p.csv");
    ASSERT_EQ(g.size(), p.size());
    double max_diff = 0;
    for (std::size_t i = 0; i < g.size(); ++i) {
        if (i) {
            EXPECT_GE(num(g[i].at("alignment")), num(g[i - 1].at("alignment")));
            EXPECT_GE(num(p[i].at("alignment")), num(p[i - 1].at("alignment")));
        }
        max_diff = std::max(max_diff, std::abs(num(g[i].at("alignment")) - num(p[i].at("alignment"))));
    }
    EXPECT_GT(max_diff, 1e-6);
}

TEST_F(Cli, MissingInputExitsTwoWithoutOutput) {
    EXPECT_EQ(run("align-sweep --data " + path("none.raln") + " --out " + path("a.csv")), 2);
    EXPECT_FALSE(fs::exists(path("a.csv")));
    EXPECT_FALSE(fs::exists(path("a.csv.manifest.json")));
    EXPECT_EQ(run("align-sweep --out " + path("a.csv")), 2);
    EXPECT_EQ(run("no-such-command"), 2);
}

TEST_F(Cli, AlignSweepDegenerateTaskExitsThree) {
    Matrix x(2, 4);
    x << 1, 0, 2, 0, 0, 1, 0, 3;
    save_container(Dataset{DataMatrix(x), {0, 0, 0, 0}, 1, {}}, path("x.raln"));
    EXPECT_EQ(run("align-sweep --data " + path("x.raln") + " --out " + path("a.csv")), 0);
    // A single class is a constant target, which centering makes unreachable.
    EXPECT_EQ(run("align-sweep --data " + path("x.raln") + " --center --out " + path("c.csv")), 3);
    EXPECT_FALSE(fs::exists(path("c.csv")));
}

TEST_F(Cli, SolveFullRankAutoencodingHasZeroLoss) {
    gen("d.raln", R"({"d": 5, "n": 20, "seed": 2, "spectrum": {"type": "power_law", "exponent": 1}})");
    ASSERT_EQ(run("solve --data " + path("d.raln") + " --targets inputs --lambda 1 --k 5 --out " + path("s.json")),
              0)
        << slurp("log.txt");
    const auto j = nlohmann::json::parse(slurp("s.json"));
    EXPECT_NEAR(j["loss"].get<double>(), 0.0, 1e-8);
    const std::string bin = slurp("s.bin");
    EXPECT_EQ(bin.substr(0, 4), "RALM");
    // V 5×5, W 5×5, Z 5×5 as float64 after a 12-byte header and 8 bytes per shape.
    EXPECT_EQ(bin.size(), 12u + 3 * (8 + 25 * 8));
}

TEST_F(Cli, SolveRejectsOversizedLatent) {
    gen("d.raln", R"({"d": 5, "n": 4, "seed": 2, "spectrum": {"type": "power_law", "exponent": 1}})");
    EXPECT_EQ(run("solve --data " + path("d.raln") + " --lambda 1 --k 5 --out " + path("s.json")), 3);
    EXPECT_FALSE(fs::exists(path("s.json")));
}

TEST_F(Cli, ValidateLambdaGridMeetsContract) {
    gen("d.raln", R"({"d": 6, "n": 10, "c": 2, "seed": 5, "spectrum": {"type": "exponential", "decay_rate": 0.2}})");
    ASSERT_EQ(run("validate --data " + path("d.raln") + " --lambda-grid 0,0.1,1,10 --k 3 --record-every 50 --out " +
                  path("v.csv")),
              0)
        << slurp("log.txt");
    const auto summary = nlohmann::json::parse(slurp("v.json"));
    ASSERT_EQ(summary["runs"].size(), 4u);
    for (const auto& r : summary["runs"]) EXPECT_TRUE(r["within_contract"].get<bool>()) << r.dump();
    std::map<std::string, int> per_lambda;
    for (const auto& row : table("v.csv")) ++per_lambda[row.at("lambda")];
    EXPECT_EQ(per_lambda.size(), 4u);
}

TEST_F(Cli, DaeGaussianIsInert) {
    gen("d.raln", kPlanted);
    ASSERT_EQ(run("dae --data " + path("d.raln") + " --noise gaussian:1 --p-grid 0,0.5,1,5,20 --k-list 2,4 --out " +
                  path("g.csv")),
              0)
        << slurp("log.txt");
    for (const auto& row : table("g.csv")) EXPECT_LE(num(row.at("product_deviation")), 1e-8);
    EXPECT_TRUE(nlohmann::json::parse(slurp("g.json"))["gaussian_invariance_holds"].get<bool>());
}

TEST_F(Cli, DaeMaskZeroLevelRowIsZero) {
    gen("d.raln", kPlanted);
    ASSERT_EQ(run("dae --data " + path("d.raln") + " --noise mask:0.5:2:2 --p-grid 0,0.25,0.5,0.75,0.99 --k-list 1,2,4 "
                  "--out " + path("m.csv")),
              0)
        << slurp("log.txt");
    const auto rows = table("m.csv");
    ASSERT_EQ(rows.size(), 15u);
    for (const auto& row : rows)
        if (num(row.at("p")) == 0.0) EXPECT_EQ(num(row.at("delta")), 0.0);
}

TEST_F(Cli, DaeMonteCarloCheckPasses) {
    gen("d.raln", R"({"d": 4, "n": 6, "seed": 9, "spectrum": {"type": "exponential", "decay_rate": 0.3}})");
    ASSERT_EQ(run("dae --data " + path("d.raln") + " --noise dropout:0.5 --p-grid 0.3,0.7 --k-list 1 --mc-check 1e5 "
                  "--out " + path("m.csv")),
              0)
        << slurp("log.txt");
    for (const auto& row : table("m.csv")) {
        EXPECT_EQ(row.at("mc_draws"), "100000");
        EXPECT_EQ(row.at("mc_pass"), "1");
    }
}

TEST_F(Cli, DaeMaskWithoutGeometryExitsThree) {
    gen("d.raln", R"({"d": 16, "n": 30, "seed": 2, "spectrum": {"type": "power_law", "exponent": 1}})");
    EXPECT_EQ(run("dae --data " + path("d.raln") + " --noise mask:0.5:2:2 --out " + path("m.csv")), 3);
    gen("e.raln", R"({"d": 16, "n": 30, "seed": 2, "spectrum": {"type": "power_law", "exponent": 1},
                      "geometry": {"height": 4, "width": 4}})");
    EXPECT_EQ(run("dae --data " + path("e.raln") + " --noise mask:0.5:3:3 --out " + path("m.csv")), 3);
    EXPECT_EQ(run("dae --data " + path("e.raln") + " --noise dropout:1.5 --out " + path("m.csv")), 2);
}

TEST_F(Cli, FilterProbeBottomBeatsTop) {
    gen("d.raln", R"({"d": 32, "n": 2000, "c": 4, "seed": 1,
                      "spectrum": {"type": "exponential", "decay_rate": 0.2},
                      "signal": {"type": "bottom_k", "k": 4, "snr": 3.0}})");
    ASSERT_EQ(run("filter-probe --data " + path("d.raln") + " --mode both --cut 0.75 --center --out " + path("f.csv")),
              0)
        << slurp("log.txt");
    const auto rows = table("f.csv");
    ASSERT_EQ(rows.size(), 2u);
    EXPECT_EQ(rows[0].at("mode"), "top");
    EXPECT_EQ(rows[0].at("boundary"), rows[1].at("boundary"));
    EXPECT_GT(num(rows[1].at("probe_accuracy")), num(rows[0].at("probe_accuracy")));
}

TEST_F(Cli, FilterProbeCutBeyondRankExitsThree) {
    gen("d.raln", R"({"d": 8, "n": 40, "seed": 1, "spectrum": {"type": "exponential", "decay_rate": 0.2}})");
    EXPECT_EQ(run("filter-probe --data " + path("d.raln") + " --mode bottom --cut-k 8 --out " + path("f.csv")), 3);
    EXPECT_EQ(run("filter-probe --data " + path("d.raln") + " --mode top --out " + path("f.csv")), 2);
}

TEST_F(Cli, DynamicsTopDirectionHalvesFirst) {
    gen("d.raln", R"({"d": 2, "n": 200, "seed": 4, "spectrum": {"type": "explicit", "values": [10, 1]}})");
    ASSERT_EQ(run("dynamics --data " + path("d.raln") + " --arch linear:1 --optimizer gd --step-size 0.02 "
                  "--init-scale 0.01 --steps 400 --checkpoint-every 1 --out " + path("dy.csv")),
              0)
        << slurp("log.txt");
    const auto summary = nlohmann::json::parse(slurp("dy.json"));
    const auto top = summary["half_residual_step"][0].get<long long>();
    const auto bottom = summary["half_residual_step"][1].get<long long>();
    EXPECT_GE(top, 0);
    EXPECT_TRUE(bottom < 0 || top < bottom);
    const auto rows = table("dy.csv");
    EXPECT_EQ(rows.size(), 2u * 401u);
    EXPECT_EQ(rows.front().at("direction_index"), "1");
}

TEST_F(Cli, DynamicsDivergenceExitsThreeWithPartialTrace) {
    gen("d.raln", R"({"d": 4, "n": 50, "seed": 4, "spectrum": {"type": "explicit", "values": [100, 50, 10, 1]}})");
    EXPECT_EQ(run("dynamics --data " + path("d.raln") + " --arch linear:2 --step-size 50 --steps 500 "
                  "--checkpoint-every 1 --out " + path("dy.csv")),
              3);
    EXPECT_TRUE(nlohmann::json::parse(slurp("dy.json"))["diverged"].get<bool>());
    EXPECT_GE(table("dy.csv").size(), 4u);
}

TEST_F(Cli, PlotLeavesCsvUnchanged) {
    gen("d.raln", kPlanted);
    ASSERT_EQ(run("align-sweep --data " + path("d.raln") + " --out " + path("a.csv")), 0);
    const std::string plain = slurp("a.csv");
    ASSERT_EQ(run("align-sweep --data " + path("d.raln") + " --plot --out " + path("a.csv")), 0);
    EXPECT_EQ(slurp("a.csv"), plain);
    EXPECT_EQ(slurp("a.svg").rfind("<svg", 0), 0u);
    ASSERT_EQ(run("filter-probe --data " + path("d.raln") + " --cut 0.5 --plot --out " + path("f.csv")), 0);
    EXPECT_TRUE(fs::exists(path("f.svg")));
}

TEST_F(Cli, RerunsAreByteIdenticalAndLeaveNoTemporaries) {
    gen("d.raln", kPlanted);
    const std::string d = " --data " + path("d.raln");
    const std::vector<std::pair<std::string, std::vector<std::string>>> runs{
        {"align-sweep" + d + " --center --out ", {".csv"}},
        {"solve" + d + " --lambda 0.5 --k 3 --out ", {".json", ".bin"}},
        {"validate" + d + " --k 2 --steps 300 --lambda-grid 0,1 --out ", {".csv", ".json"}},
        {"dae" + d + " --noise mask:0.5:2:2 --p-grid 0,0.5 --k-list 2 --mc-check 200 --out ", {".csv", ".json"}},
        {"filter-probe" + d + " --cut 0.6 --out ", {".csv"}},
        {"dynamics" + d + " --arch mlp:6,3 --steps 30 --checkpoint-every 10 --out ", {".csv", ".json"}},
    };
    fs::create_directories(dir_ / "a");
    fs::create_directories(dir_ / "b");
    for (std::size_t i = 0; i < runs.size(); ++i) {
        const auto& [cmd, exts] = runs[i];
        const std::string stem = "r" + std::to_string(i);
        ASSERT_EQ(run(cmd + path("a/" + stem + exts.front())), 0) << cmd << '\n' << slurp("log.txt");
        ASSERT_EQ(run(cmd + path("b/" + stem + exts.front())), 0) << cmd;
        for (const auto& ext : exts)
            EXPECT_EQ(slurp("a/" + stem + ext), slurp("b/" + stem + ext)) << cmd << ext;
    }
    for (const auto& entry : fs::recursive_directory_iterator(dir_))
        EXPECT_EQ(entry.path().string().find(".tmp-"), std::string::npos) << entry.path();
}
