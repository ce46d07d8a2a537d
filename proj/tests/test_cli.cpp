// End-to-end checks that drive the installed binary like a user would.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>
#include <unistd.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>

#include "ftlab/util.hpp"

using namespace ftlab;
namespace fs = std::filesystem;

#ifndef FTLAB_BIN
#error "FTLAB_BIN must point at the ftlab executable"
#endif

namespace {

struct TmpDir {
    fs::path path;
    TmpDir() : path(fs::temp_directory_path() / ("ftlab-cli-" + std::to_string(::getpid()))) {
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TmpDir() { fs::remove_all(path); }
    std::string file(const std::string& name) const { return (path / name).string(); }
};

struct RunResult {
    int exit_code;
    std::string output;
};

RunResult run(const std::string& args) {
    static int counter = 0;
    std::string capture =
        (fs::temp_directory_path() /
         ("ftlab-cli-out-" + std::to_string(::getpid()) + "-" + std::to_string(++counter)))
            .string();
    std::string cmd = std::string(FTLAB_BIN) + " " + args + " >" + capture + " 2>&1";
    int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    std::ifstream in(capture);
    r.output.assign(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
    fs::remove(capture);
    return r;
}

}  // namespace

TEST_CASE("help exits zero, usage problems exit 64") {
    CHECK(run("--help").exit_code == 0);
    CHECK(run("train-lm --help").exit_code == 0);
    CHECK(run("no-such-subcommand").exit_code == 64);
    CHECK(run("generate --prompt x --no-such-flag").exit_code == 64);
    CHECK(run("").exit_code == 64);
}

TEST_CASE("missing input files exit 2") {
    RunResult r = run("eval-mc --items /nonexistent/items.jsonl");
    CHECK(r.exit_code == 2);
    CHECK(r.output.find("error") != std::string::npos);
}

TEST_CASE("eval-human prints per-model sums from a votes fixture") {
    TmpDir tmp;
    write_text_file(tmp.file("votes.csv"),
                    "evaluator_id,question_id,model_id\n"
                    "e1,q1,alpha\n"
                    "e2,q1,alpha\n"
                    "e3,q1,beta\n"
                    "e1,q2,\n");
    RunResult r = run("eval-human --votes " + tmp.file("votes.csv") + " --models alpha,beta");
    CHECK(r.exit_code == 0);
    CHECK(r.output.find("alpha") != std::string::npos);
    CHECK(r.output.find("2") != std::string::npos);
    CHECK(r.output.find("abstentions") != std::string::npos);

    // duplicate vote is a validation failure
    write_text_file(tmp.file("dup.csv"),
                    "evaluator_id,question_id,model_id\n"
                    "e1,q1,alpha\n"
                    "e1,q1,beta\n");
    CHECK(run("eval-human --votes " + tmp.file("dup.csv") + " --models alpha,beta").exit_code ==
          1);
}

TEST_CASE("validate-instructions exits 1 on violations") {
    TmpDir tmp;
    write_text_file(
        tmp.file("good.jsonl"),
        R"({"messages":[{"role":"system","content":"s"},{"role":"user","content":"q"},{"role":"assistant","content":"a"}]})"
        "\n");
    CHECK(run("validate-instructions --in " + tmp.file("good.jsonl")).exit_code == 0);

    write_text_file(tmp.file("bad.jsonl"), "{broken\n");
    RunResult r = run("validate-instructions --in " + tmp.file("bad.jsonl"));
    CHECK(r.exit_code == 1);
    CHECK(r.output.find(":1:") != std::string::npos);
}

TEST_CASE("build-instructions then validate-instructions") {
    TmpDir tmp;
    write_text_file(tmp.file("items.csv"),
                    "category,question,answer\n"
                    "philosophy,Why?,Because.\n"
                    "facts,How many?,Three.\n");
    RunResult built = run("build-instructions --in " + tmp.file("items.csv") + " --out " +
                          tmp.file("out.jsonl"));
    CHECK(built.exit_code == 0);
    CHECK(built.output.find("warning") != std::string::npos);  // under 10 items
    CHECK(run("validate-instructions --in " + tmp.file("out.jsonl")).exit_code == 0);
}

TEST_CASE("build-corpus reports the chunk arithmetic") {
    TmpDir tmp;
    fs::create_directories(tmp.path / "corpus");
    write_text_file(tmp.file("corpus/a.txt"), std::string(100, 'a'));
    write_text_file(tmp.file("corpus/b.txt"), std::string(50, 'b'));
    RunResult r = run("build-corpus --corpus-dir " + tmp.file("corpus") + " --chunk-len 32");
    CHECK(r.exit_code == 0);
    // 152 tokens with the two eos markers -> 4 chunks of 32
    CHECK(r.output.find("\"chunks\": 4") != std::string::npos);
}

TEST_CASE("train-lm with a fixed seed is bit reproducible") {
    TmpDir tmp;
    fs::create_directories(tmp.path / "corpus");
    write_text_file(tmp.file("corpus/a.txt"),
                    "the quick brown fox jumps over the lazy dog. " );
    auto train = [&](const std::string& tag) {
        std::string args =
            "train-lm --seed 7 --corpus-dir " + tmp.file("corpus") +
            " --chunk-len 16 --epochs 2 --dim 16 --layers 1 --heads 2 --mlp-hidden 32"
            " --context 32 --rank 2 --no-timestamps"
            " --adapter-out " + tmp.file(tag + ".ftla") +
            " --history-out " + tmp.file(tag + ".csv");
        return run(args);
    };
    CHECK(train("one").exit_code == 0);
    CHECK(train("two").exit_code == 0);
    CHECK(read_text_file(tmp.file("one.ftla")) == read_text_file(tmp.file("two.ftla")));
    CHECK(read_text_file(tmp.file("one.csv")) == read_text_file(tmp.file("two.csv")));
    CHECK(read_text_file(tmp.file("one.csv")).rfind("epoch,loss,seconds", 0) == 0);
}

TEST_CASE("build-labels joins a csv price fixture") {
    TmpDir tmp;
    write_text_file(tmp.file("heads.csv"),
                    "headline,ticker,date\n"
                    "acme pops,ACME,2024-02-01\n"
                    "ghost co,NOPE,2024-02-01\n");
    write_text_file(tmp.file("prices.csv"),
                    "ticker,date,adj_close\n"
                    "ACME,2024-02-01,100\n"
                    "ACME,2024-02-02,103\n");
    RunResult r = run("build-labels --headlines " + tmp.file("heads.csv") + " --prices " +
                      tmp.file("prices.csv") + " --out " + tmp.file("labeled.csv"));
    CHECK(r.exit_code == 0);
    std::string labeled = read_text_file(tmp.file("labeled.csv"));
    CHECK(labeled.find("U3") != std::string::npos);
    CHECK(r.output.find("unknown_ticker") != std::string::npos);
}

TEST_CASE("generate emits the prompt plus a continuation") {
    RunResult r = run("generate --prompt hello --max-new-tokens 3 --dim 16 --layers 1 "
                      "--heads 2 --mlp-hidden 32 --context 32");
    CHECK(r.exit_code == 0);
    CHECK(r.output.rfind("hello", 0) == 0);
}
