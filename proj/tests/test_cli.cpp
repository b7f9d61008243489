#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <fcntl.h>
#include <unistd.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <vector>

#include "lznet/cli.hpp"
#include "lznet/tasks.hpp"

using namespace lznet;

namespace {

struct TempDir {
    std::filesystem::path path;
    TempDir() {
        path = std::filesystem::temp_directory_path() /
               ("lznet_cli_" + std::to_string(::getpid()) + "_" +
                std::to_string(counter()++));
        std::filesystem::create_directories(path);
    }
    ~TempDir() { std::filesystem::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
    static int& counter() {
        static int c = 0;
        return c;
    }
};

int run_cli(const std::vector<std::string>& args, std::string* captured = nullptr) {
    std::vector<const char*> argv;
    argv.push_back("lznet");
    for (const auto& a : args) argv.push_back(a.c_str());

    int exit_code = 0;
    if (captured) {
        TempDir dir;
        const auto out_path = dir.file("stdout.txt");
        ::fflush(stdout);
        const int saved = ::dup(STDOUT_FILENO);
        const int fd = ::open(out_path.c_str(), O_WRONLY | O_CREAT | O_TRUNC, 0644);
        ::dup2(fd, STDOUT_FILENO);
        ::close(fd);
        exit_code = cli::run(static_cast<int>(argv.size()), argv.data());
        ::fflush(stdout);
        ::dup2(saved, STDOUT_FILENO);
        ::close(saved);
        std::ifstream f(out_path);
        std::ostringstream s;
        s << f.rdbuf();
        *captured = s.str();
    } else {
        exit_code = cli::run(static_cast<int>(argv.size()), argv.data());
    }
    return exit_code;
}

void write_file(const std::string& path, const std::string& content) {
    std::ofstream f(path, std::ios::binary);
    f << content;
}

}  // namespace

TEST_CASE("usage errors exit with code 2") {
    CHECK(run_cli({}) == 2);
    CHECK(run_cli({"frobnicate"}) == 2);
    std::string out;
    CHECK(run_cli({"digest"}, &out) == 2);          // missing argument
    CHECK(run_cli({"train", "--frobnicate"}) == 2);  // unknown flag
}

TEST_CASE("digest prints one entry per line") {
    TempDir dir;
    write_file(dir.file("seq.bin"), "aabbaba");
    std::string out;
    CHECK(run_cli({"digest", dir.file("seq.bin")}, &out) == 0);
    CHECK(out == "a\nab\nb\naba\n");
}

TEST_CASE("lzjd of a file with itself prints zero") {
    TempDir dir;
    write_file(dir.file("a.bin"), "the quick brown fox");
    std::string out;
    CHECK(run_cli({"lzjd", dir.file("a.bin"), dir.file("a.bin")}, &out) == 0);
    CHECK(out == "0.000000\n");

    write_file(dir.file("b.bin"), "aabbba");
    write_file(dir.file("c.bin"), "aabbaba");
    CHECK(run_cli({"lzjd", dir.file("c.bin"), dir.file("b.bin")}, &out) == 0);
    CHECK(out == "0.400000\n");

    CHECK(run_cli({"lzjd", dir.file("missing.bin"), dir.file("a.bin")}) == 1);
}

TEST_CASE("train subcommand writes a metrics CSV") {
    TempDir dir;
    std::string out;
    const int code = run_cli(
        {"train", "--task", "addition", "--model", "lz", "--backend", "hrr",
         "--seq-len", "6", "--hidden", "9", "--batch", "4", "--epochs", "1",
         "--batches_per_epoch", "1", "--eval_batches", "1", "--seed", "3",
         "--metrics_path", dir.file("m.csv"), "--checkpoint_path", dir.file("c.ckpt")},
        &out);
    CHECK(code == 0);
    CHECK(std::filesystem::exists(dir.file("m.csv")));
    CHECK(std::filesystem::exists(dir.file("c.ckpt")));

    std::ifstream f(dir.file("m.csv"));
    std::string header;
    std::getline(f, header);
    CHECK(header == "epoch,split,loss,accuracy,mean_p,wallclock_s");

    // eval subcommand loads the checkpoint back
    std::string eval_out;
    const int eval_code = run_cli(
        {"eval", dir.file("c.ckpt"), "--task", "addition", "--model", "lz",
         "--seq-len", "6", "--hidden", "9", "--batch", "4", "--eval_batches", "1",
         "--seed", "3"},
        &eval_out);
    CHECK(eval_code == 0);
    CHECK(eval_out.find("loss") != std::string::npos);
}

TEST_CASE("config file plus flag overrides") {
    TempDir dir;
    write_file(dir.file("run.cfg"),
               "task=addition\nmodel=lstm\nhidden=9\nbatch=4\nseq_len=6\n"
               "epochs=1\nbatches_per_epoch=1\neval_batches=1\nseed=5\n");
    const auto metrics = dir.file("m.csv");
    const int code =
        run_cli({"train", "--config", dir.file("run.cfg"), "--metrics_path", metrics,
                 "--checkpoint_path", dir.file("c.ckpt"), "--epochs", "2"});
    CHECK(code == 0);
    std::ifstream f(metrics);
    std::string line;
    std::size_t lines = 0;
    while (std::getline(f, line)) ++lines;
    CHECK(lines == 1 + 4);  // header + 2 epochs x (train + test): override won

    write_file(dir.file("bad.cfg"), "zzz=1\n");
    CHECK(run_cli({"train", "--config", dir.file("bad.cfg")}) == 1);
}

TEST_CASE("knn subcommand classifies the frequency dataset") {
    TempDir dir;
    auto train_ds = tasks::make_frequency_dataset(20, 32, 3);
    auto test_ds = tasks::make_frequency_dataset(10, 32, 4);
    tasks::write_ucr_tsv(dir.file("train.tsv"), train_ds);
    tasks::write_ucr_tsv(dir.file("test.tsv"), test_ds);
    std::string out;
    const int code = run_cli({"knn", "--train", dir.file("train.tsv"), "--test",
                              dir.file("test.tsv"), "--k", "3"},
                             &out);
    CHECK(code == 0);
    const double accuracy = std::stod(out);
    CHECK(accuracy >= 0.0);
    CHECK(accuracy <= 1.0);
}

TEST_CASE("vsa-bench prints a table") {
    std::string out;
    CHECK(run_cli({"vsa-bench", "--dim", "64", "--max-items", "4", "--trials", "3"},
                  &out) == 0);
    CHECK(out.find("hrr") != std::string::npos);
    CHECK(out.find("vtb") != std::string::npos);
    CHECK(out.find("pair") != std::string::npos);
}

TEST_CASE("gradcheck subcommand passes") {
    std::string out;
    CHECK(run_cli({"gradcheck"}, &out) == 0);
    CHECK(out.find("FAIL") == std::string::npos);
    CHECK(out.find("lz_forward_hrr") != std::string::npos);
    CHECK(out.find("lz_forward_vtb") != std::string::npos);
}
