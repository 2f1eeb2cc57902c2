#include <gtest/gtest.h>

#include <sys/wait.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "sgvi/sgvi.hpp"

namespace fs = std::filesystem;
using namespace sgvi;

namespace {

const fs::path& work_dir() {
    static const fs::path dir = [] {
        fs::path p = fs::temp_directory_path() / "sgvi_cli_tests";
        fs::remove_all(p);
        fs::create_directories(p);
        return p;
    }();
    return dir;
}

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

struct Result {
    int code;
    std::string output;
};

Result run(const std::string& args) {
    static int counter = 0;
    const fs::path log = work_dir() / ("out_" + std::to_string(counter++) + ".txt");
    const std::string cmd = std::string("\"") + SGVI_CLI_PATH + "\" " + args + " > \"" + log.string() + "\" 2>&1";
    const int status = std::system(cmd.c_str());
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1, slurp(log)};
}

std::string synth_path() {
    static const std::string path = [] {
        const fs::path p = work_dir() / "synth.libsvm";
        const Result r = run("datagen --kind logistic --seed 1 --out " + p.string());
        EXPECT_EQ(r.code, 0) << r.output;
        return p.string();
    }();
    return path;
}

std::string bars_path() {
    static const std::string path = [] {
        const fs::path p = work_dir() / "bars.csv";
        const Result r = run("datagen --kind bars --seed 2 --n 200 --out " + p.string());
        EXPECT_EQ(r.code, 0) << r.output;
        return p.string();
    }();
    return path;
}

std::string zero_vae_theta(const std::string& name, Index D, Index latent, Index rows, Index cols) {
    const VAEConfig vc{D, 4, latent};
    const Layout L = VAEModel::make_layout(vc);
    const std::string meta = "{\"model\":\"vae\",\"input_dim\":" + std::to_string(D) + ",\"hidden_dim\":4,\"latent_dim\":" +
                             std::to_string(latent) + ",\"image_rows\":" + std::to_string(rows) +
                             ",\"image_cols\":" + std::to_string(cols) + "}";
    const fs::path p = work_dir() / name;
    save_theta(p.string(), L, Vector::Zero(L.size()), meta);
    return p.string();
}

}  // namespace

TEST(CliTrain, RerunIsByteIdentical) {
    const fs::path a = work_dir() / "hf_a", b = work_dir() / "hf_b";
    const std::string common = "train --model logistic --optimizer hf --samples 10 --line-search --data " + synth_path() + " --seed 1 --max-outer 10";
    ASSERT_EQ(run(common + " --out " + a.string()).code, 0);
    ASSERT_EQ(run(common + " --out " + b.string()).code, 0);
    EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
    EXPECT_EQ(slurp(a / "theta.bin"), slurp(b / "theta.bin"));
    EXPECT_EQ(slurp(a / "trace.csv").rfind("iter,wall_seconds,elbo,grad_norm,inner_iters\n", 0), 0u);
}

TEST(CliTrain, SeparableSetHasNoTrainingErrors) {
    const fs::path dir = work_dir() / "hf_sep";
    const Result r = run("train --model logistic --optimizer hf --samples 10 --line-search --max-outer 10 --data " + synth_path() + " --out " +
                         dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_NE(slurp(dir / "misclassification.txt").find("train_errors 0\n"), std::string::npos);
}

TEST(CliTrain, ConfigReproducesTrace) {
    for (const char* opt : {"lbfgs", "adagrad"}) {
        const fs::path a = work_dir() / (std::string("cfg_a_") + opt), b = work_dir() / (std::string("cfg_b_") + opt);
        ASSERT_EQ(run(std::string("train --model logistic --optimizer ") + opt + " --batch 50 --samples 2 --seed 7 " +
                      "--max-outer 30 --data " + synth_path() + " --out " + a.string())
                      .code,
                  0);
        const std::string cfg = slurp(a / "config.json");
        EXPECT_NE(cfg.find("\"data_hash\""), std::string::npos);
        EXPECT_NE(cfg.find("\"batch_size\": 50"), std::string::npos);
        ASSERT_EQ(run("train --config " + (a / "config.json").string() + " --out " + b.string()).code, 0);
        EXPECT_EQ(slurp(a / "trace.csv"), slurp(b / "trace.csv"));
        std::string expected = cfg;
        expected.replace(expected.find(a.string()), a.string().size(), b.string());
        EXPECT_EQ(slurp(b / "config.json"), expected);
    }
}

TEST(CliTrain, FlagsOverrideConfig) {
    const fs::path a = work_dir() / "ovr_a", b = work_dir() / "ovr_b";
    ASSERT_EQ(run("train --optimizer adagrad --max-outer 5 --data " + synth_path() + " --out " + a.string()).code, 0);
    ASSERT_EQ(run("train --config " + (a / "config.json").string() + " --max-outer 3 --out " + b.string()).code, 0);
    EXPECT_NE(slurp(b / "config.json").find("\"max_outer\": 3"), std::string::npos);
    EXPECT_NE(slurp(b / "config.json").find("\"optimizer\": \"adagrad\""), std::string::npos);
}

TEST(CliTrain, MissingDatasetIsUsageError) {
    const Result r = run("train --model logistic --data /nonexistent/file.libsvm --out " + (work_dir() / "x").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("cannot open"), std::string::npos);
    EXPECT_EQ(run("train --model nope --data " + synth_path()).code, 2);
    EXPECT_EQ(run("train --bogus-flag").code, 2);
    EXPECT_EQ(run("").code, 2);
}

TEST(CliTrain, NumericAbortNamesIteration) {
    const Result r = run("train --model logistic --optimizer lbfgs --sigma0 1e300 --data " + synth_path() + " --out " +
                         (work_dir() / "nan").string());
    EXPECT_EQ(r.code, 3) << r.output;
    EXPECT_NE(r.output.find("iteration 1"), std::string::npos) << r.output;
}

TEST(CliTrain, VaeRunThenGenerate) {
    const fs::path dir = work_dir() / "vae";
    const Result r = run("train --model vae --optimizer adagrad --hidden 8 --dz 2 --max-outer 20 --batch 50 --data " +
                         bars_path() + " --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    EXPECT_FALSE(fs::exists(dir / "misclassification.txt"));
    const fs::path img = work_dir() / "vae.pgm";
    ASSERT_EQ(run("generate --theta " + (dir / "theta.bin").string() + " --side 5 --out " + img.string()).code, 0);
    EXPECT_EQ(slurp(img).rfind("P5\n44 44\n255\n", 0), 0u);
}

TEST(CliCheck, VaeGradientPasses) {
    const Result r = run("check --which grad --model vae --d 8 --dz 3");
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(r.output.find("max relative error"), std::string::npos);
}

TEST(CliCheck, LogisticGradientAndHv) {
    EXPECT_EQ(run("check --which grad --model logistic --d 10").code, 0);
    EXPECT_EQ(run("check --which hv --model logistic --d 10").code, 0);
    EXPECT_EQ(run("check --which hv --model vae --d 8 --dz 3").code, 0);
}

TEST(CliCheck, CorruptedGradientIsCaught) {
    const Result r = run("check --which grad --model vae --d 8 --dz 3 --configs 2 --corrupt 17");
    EXPECT_EQ(r.code, 1);
    EXPECT_NE(r.output.find("coordinate 17"), std::string::npos) << r.output;
}

TEST(CliCheck, IdentitiesPass) {
    const fs::path csv = work_dir() / "identities.csv";
    const Result r = run("check --which identities --csv " + csv.string());
    EXPECT_EQ(r.code, 0) << r.output;
    EXPECT_NE(slurp(csv).find("z^4,hessian-C,0,"), std::string::npos);
    EXPECT_EQ(run("check --which nothing").code, 2);
}

TEST(CliVariance, LinearFunctionRows) {
    const fs::path dir = work_dir() / "var_linear";
    const Result r = run("variance --function linear --trials 20000 --out " + dir.string());
    ASSERT_EQ(r.code, 0) << r.output;
    std::istringstream in(slurp(dir / "variance.csv"));
    std::string line;
    std::getline(in, line);
    int rows = 0;
    while (std::getline(in, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cells.push_back(c);
        ASSERT_EQ(cells.size(), 7u);
        EXPECT_NEAR(std::stod(cells[2]), 1.0, 0.05);
        EXPECT_NEAR(std::stod(cells[4]), 2.4674011002723395, 1e-12);
        ++rows;
    }
    EXPECT_EQ(rows, 4);
}

TEST(CliVariance, ConstantAndRefusal) {
    const fs::path dir = work_dir() / "var_const";
    ASSERT_EQ(run("variance --function constant --trials 1000 --dims 1,5 --out " + dir.string()).code, 0);
    std::istringstream in(slurp(dir / "variance.csv"));
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) EXPECT_TRUE(line.ends_with(",0,0,0,0,1")) << line;
    const Result r = run("variance --trials 100");
    EXPECT_EQ(r.code, 2);
    EXPECT_EQ(run("variance --function nope --trials 1000").code, 2);
}

TEST(CliGenerate, ZeroDecoderGrid) {
    const std::string theta = zero_vae_theta("zero28.bin", 784, 2, 28, 28);
    const fs::path img = work_dir() / "zero.pgm";
    const Result r = run("generate --theta " + theta + " --side 20 --out " + img.string());
    ASSERT_EQ(r.code, 0) << r.output;
    const std::string pgm = slurp(img);
    const std::string header = "P5\n579 579\n255\n";
    ASSERT_EQ(pgm.rfind(header, 0), 0u);
    ASSERT_EQ(pgm.size(), header.size() + 579u * 579u);
    EXPECT_EQ(static_cast<unsigned char>(pgm[header.size()]), 128);
    EXPECT_EQ(static_cast<unsigned char>(pgm[header.size() + 28]), 0);
}

TEST(CliGenerate, RejectsWrongModels) {
    const Result r3 = run("generate --theta " + zero_vae_theta("dz3.bin", 16, 3, 4, 4) + " --out " +
                          (work_dir() / "dz3.pgm").string());
    EXPECT_EQ(r3.code, 2);
    const fs::path dir = work_dir() / "logit_theta";
    ASSERT_EQ(run("train --optimizer adagrad --max-outer 2 --data " + synth_path() + " --out " + dir.string()).code, 0);
    const Result r = run("generate --theta " + (dir / "theta.bin").string() + " --out " + (work_dir() / "l.pgm").string());
    EXPECT_EQ(r.code, 2);
    EXPECT_NE(r.output.find("layout mismatch"), std::string::npos) << r.output;
    EXPECT_EQ(run("generate --theta /nonexistent.bin").code, 2);
}
