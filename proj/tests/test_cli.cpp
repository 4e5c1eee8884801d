#include <gtest/gtest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <regex>
#include <string>

#include <sys/wait.h>
#include <unistd.h>

#include "wbnet/io/container.hpp"
#include "wbnet/io/image.hpp"
#include "wbnet/pipeline/model.hpp"

using namespace wbnet;
namespace fs = std::filesystem;

namespace {

struct CliRun {
  int code = -1;
  std::string err;
};

class Cli : public ::testing::Test {
 protected:
  static void SetUpTestSuite() {
    root_ = fs::temp_directory_path() / ("wbnet_cli_" + std::to_string(::getpid()));
    fs::remove_all(root_);
    fs::create_directories(root_);
    std::ofstream(root_ / "tiny.cfg") << "[grid]\nlevels=3\nleaf=4\n[family]\nname=squares\n"
                                         "[data]\ntrain=8\ntest=3\nseed=2\n"
                                         "[train]\nepochs=2\nbatch=4\ncheckpoint_every=1\n";
  }
  static void TearDownTestSuite() { fs::remove_all(root_); }

  static CliRun run(const std::string& args) {
    const fs::path log = root_ / "stderr.txt";
    const std::string cmd = std::string(WBNET_CLI) + " " + args + " > /dev/null 2> " + log.string();
    const int status = std::system(cmd.c_str());
    std::ifstream f(log);
    return {WIFEXITED(status) ? WEXITSTATUS(status) : -1,
            {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()}};
  }

  static std::string cfg() { return (root_ / "tiny.cfg").string(); }
  static std::string at(const std::string& name) { return (root_ / name).string(); }

  static const fs::path& data() {
    static const fs::path d = [] {
      EXPECT_EQ(run("generate-data --config " + cfg() + " --seed 7 --out " + at("data")).code, 0);
      return root_ / "data";
    }();
    return d;
  }

  static std::string bytes(const fs::path& p) {
    std::ifstream f(p, std::ios::binary);
    return {std::istreambuf_iterator<char>(f), std::istreambuf_iterator<char>()};
  }

  static inline fs::path root_;
};

// The last stderr line of a failing run: error code=N kind=<word> reason="..."
void expect_error_line(const CliRun& r, int code) {
  EXPECT_EQ(r.code, code) << r.err;
  const auto last = r.err.substr(r.err.rfind('\n', r.err.size() - 2) + 1);
  EXPECT_TRUE(std::regex_match(last, std::regex("error code=" + std::to_string(code) + " kind=[a-z]+ reason=\".*\"\n")))
      << last;
}

TEST_F(Cli, SelftestPasses) {
  const CliRun r = run("selftest");
  EXPECT_EQ(r.code, 0) << r.err;
  EXPECT_NE(r.err.find("event=selftest.done"), std::string::npos);
  EXPECT_NE(r.err.find("failed=0"), std::string::npos);
}

TEST_F(Cli, GenerateDataTwiceIsByteIdentical) {
  const fs::path a = data();
  ASSERT_EQ(run("generate-data --config " + cfg() + " --seed 7 --out " + at("again")).code, 0);
  std::size_t files = 0;
  for (const auto& e : fs::recursive_directory_iterator(a)) {
    if (!e.is_regular_file()) continue;
    const fs::path twin = root_ / "again" / fs::relative(e.path(), a);
    ASSERT_TRUE(fs::exists(twin)) << twin;
    EXPECT_EQ(bytes(e.path()), bytes(twin)) << e.path();
    ++files;
  }
  EXPECT_EQ(files, 6u);  // manifest + eta + data, for train and test
  ASSERT_EQ(run("generate-data --config " + cfg() + " --seed 8 --out " + at("other")).code, 0);
  EXPECT_NE(bytes(a / "test" / "eta.wbds"), bytes(root_ / "other" / "test" / "eta.wbds"));
}

TEST_F(Cli, OrderFlagForcesBothSplits) {
  ASSERT_EQ(run("generate-data --config " + cfg() + " --order 4 --out " + at("o4")).code, 0);
  EXPECT_EQ(io::load_dataset(root_ / "o4" / "train").order, StencilOrder::fourth);
  EXPECT_EQ(io::load_dataset(root_ / "o4" / "test").order, StencilOrder::fourth);
  EXPECT_EQ(io::load_dataset(data() / "train").order, StencilOrder::second);
  EXPECT_EQ(io::load_dataset(data() / "test").order, StencilOrder::fourth);
}

TEST_F(Cli, TrainThenInferEmitsImagesAndBlob) {
  ASSERT_EQ(run("train --config " + cfg() + " --data " + data().string() + " --out " + at("run")).code, 0);
  for (const char* p : {"history.csv", "checkpoint-epoch-1", "checkpoint-epoch-2", "final"})
    EXPECT_TRUE(fs::exists(root_ / "run" / p)) << p;

  ASSERT_EQ(run("infer --checkpoint " + at("run/final") + " --input " + (data() / "test").string() + " --out " +
                at("inf"))
                .code,
            0);
  const auto test = io::load_dataset(data() / "test");
  const auto blob = io::read_blob<float>(root_ / "inf" / "predictions.wbds");
  ASSERT_EQ(blob.dims, (std::vector<std::uint64_t>{3, 32, 32}));
  // Same numbers as running the loaded checkpoint in process on clean data.
  const auto ck = io::load_checkpoint(root_ / "run" / "final");
  const auto preds = pipeline::predict(ck.model, test.data);
  for (std::size_t k = 0; k < 3; ++k) {
    const auto pgm = io::read_pgm(root_ / "inf" / ("pred_" + std::to_string(k) + ".pgm"));
    EXPECT_EQ(pgm.rows, 32);
    EXPECT_EQ(pgm.cols, 32);
    for (int i = 0; i < 32; ++i)
      for (int j = 0; j < 32; ++j)
        ASSERT_EQ(blob.values[k * 1024 + std::size_t(i) * 32 + std::size_t(j)], float(preds[k](i, j)));
  }
}

TEST_F(Cli, ResumeMatchesUninterruptedRun) {
  const std::string base = "train --config " + cfg() + " --data " + data().string();
  ASSERT_EQ(run(base + " --out " + at("full")).code, 0);
  ASSERT_EQ(run(base + " --epochs 1 --out " + at("half")).code, 0);
  ASSERT_EQ(run(base + " --resume " + at("half/final") + " --out " + at("resumed")).code, 0);
  EXPECT_EQ(bytes(root_ / "full" / "final" / "params.wbds"), bytes(root_ / "resumed" / "final" / "params.wbds"));
  EXPECT_EQ(bytes(root_ / "full" / "history.csv"), bytes(root_ / "resumed" / "history.csv"));
}

TEST_F(Cli, ExitCodes) {
  expect_error_line(run("train --config " + at("missing.cfg") + " --data x --out y"), 2);
  expect_error_line(run("frobnicate"), 2);
  expect_error_line(run("generate-data --config " + cfg() + " --order 3 --out " + at("z")), 2);

  std::ofstream(root_ / "bad.cfg") << "[grid]\nlevels=3\nleaf=4\nwidth=9\n";
  expect_error_line(run("generate-data --config " + at("bad.cfg") + " --out " + at("z")), 2);

  expect_error_line(run("infer --checkpoint " + at("nowhere") + " --input " + data().string() + " --out " + at("z")), 3);

  // Flip one payload byte of a copy: checksum failure.
  fs::copy(data() / "test", root_ / "corrupt", fs::copy_options::recursive);
  {
    std::fstream f(root_ / "corrupt" / "eta.wbds", std::ios::in | std::ios::out | std::ios::binary);
    f.seekp(100);
    f.put('\x5a');
  }
  expect_error_line(run("fbp --input " + at("corrupt") + " --out " + at("z")), 3);

  expect_error_line(run("fbp --input " + (data() / "test").string() + " --freq 7 --out " + at("z")), 2);
  EXPECT_EQ(run("gradcheck --variant switchless").code, 0);
}

}  // namespace
