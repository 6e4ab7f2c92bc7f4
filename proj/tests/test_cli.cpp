// Exercises the installed command-line surface. Needs the binary path in
// RLPART_CLI (ctest sets it); the cases are skipped when it is absent.
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "oracles.hpp"
#include "rlpart/data_io.hpp"
#include "rlpart/edge_sep.hpp"
#include "rlpart/ordering.hpp"

using namespace rlpart;

namespace {

std::string cli_path() {
  const char* env = std::getenv("RLPART_CLI");
  return env ? env : "";
}

int run(const std::string& args, std::string* stdout_text = nullptr) {
  const std::string out = "/tmp/rlpart_cli_stdout.txt";
  const int rc = std::system((cli_path() + " " + args + " > " + out + " 2>/dev/null").c_str());
  if (stdout_text) {
    std::ifstream is(out);
    std::stringstream ss;
    ss << is.rdbuf();
    *stdout_text = ss.str();
  }
  return WEXITSTATUS(rc);
}

}  // namespace

TEST_CASE("command line surface") {
  if (cli_path().empty()) {
    MESSAGE("RLPART_CLI not set; skipping CLI tests");
    return;
  }
  namespace fs = std::filesystem;
  const std::string dir = "/tmp/rlpart_cli_test";
  fs::remove_all(dir);
  fs::create_directories(dir);

  SUBCASE("train writes a checkpoint and a complete log") {
    const int rc = run("train --task edge --delaunay --dataset-n-min 40 --dataset-n-max 120 "
                       "--dataset-size 10 --epochs 2 --seed 7 --out-checkpoint " +
                       dir + "/edge.ckpt --log " + dir + "/train.log");
    CHECK(rc == 0);
    CHECK(fs::exists(dir + "/edge.ckpt"));
    std::ifstream is(dir + "/train.log");
    std::string line;
    int records = 0;
    while (std::getline(is, line))
      if (!line.empty() && line[0] != '#') records++;
    CHECK(records == 20);  // 10 graphs x 2 epochs
  }

  SUBCASE("train without a dataset source exits with code 2") {
    CHECK(run("train --task edge --epochs 1") == 2);
  }

  SUBCASE("unreadable input exits nonzero") {
    CHECK(run("partition --input /nonexistent.mtx --out " + dir + "/p.txt") == 2);
  }

  SUBCASE("partitioning a long path is near-balanced with the fallback solver") {
    write_matrix_market(SparsePattern{oracle::path(100)}, dir + "/path100.mtx");
    std::string text;
    const int rc = run("partition --input " + dir + "/path100.mtx --out " + dir +
                           "/part.txt --n-min 128 --seed 1",
                       &text);
    CHECK(rc == 0);
    Graph g = oracle::path(100);
    Bisection b = read_partition(g, dir + "/part.txt");
    CHECK(b.volume_balance() <= 1.1);
    CHECK(text.find("balance=") != std::string::npos);
  }

  SUBCASE("order and evalfill on a tridiagonal pattern report zero fill") {
    write_matrix_market(SparsePattern{oracle::path(60)}, dir + "/tri.mtx");
    std::string text;
    CHECK(run("order --input " + dir + "/tri.mtx --out " + dir +
                  "/perm.txt --method natural",
              &text) == 0);
    CHECK(text.find("fill=0") != std::string::npos);

    CHECK(run("evalfill --input " + dir + "/tri.mtx --orderings natural,md --out " + dir +
              "/fill.txt") == 0);
    std::ifstream is(dir + "/fill.txt");
    std::string line;
    std::getline(is, line);  // header
    int rows = 0;
    while (std::getline(is, line)) {
      std::istringstream ls(line);
      std::string id, ordering;
      long n, nnz, factor, fill;
      double wall;
      REQUIRE(static_cast<bool>(ls >> id >> n >> nnz >> ordering >> factor >> fill >> wall));
      CHECK(fill == 0);
      rows++;
    }
    CHECK(rows == 2);  // one comparison row per ordering
  }

  SUBCASE("evalfill refuses fewer than two orderings") {
    write_matrix_market(SparsePattern{oracle::path(10)}, dir + "/p10.mtx");
    CHECK(run("evalfill --input " + dir + "/p10.mtx --orderings natural") == 2);
  }

  SUBCASE("permutation files parse back") {
    write_matrix_market(SparsePattern{oracle::grid(8, 8)}, dir + "/g.mtx");
    CHECK(run("order --input " + dir + "/g.mtx --out " + dir + "/perm.txt --method md") == 0);
    Permutation p = read_permutation(dir + "/perm.txt");
    CHECK(p.size() == 64);
  }

  SUBCASE("config file sets flags, command line wins") {
    write_matrix_market(SparsePattern{oracle::path(30)}, dir + "/p30.mtx");
    {
      std::ofstream os(dir + "/conf.ini");
      os << "[order]\nmethod=natural\n";
    }
    std::string text;
    CHECK(run("--config " + dir + "/conf.ini order --input " + dir + "/p30.mtx --out " + dir +
                  "/perm2.txt",
              &text) == 0);
    CHECK(text.find("method=natural") != std::string::npos);
    CHECK(run("--config " + dir + "/conf.ini order --method md --input " + dir +
                  "/p30.mtx --out " + dir + "/perm3.txt",
              &text) == 0);
    CHECK(text.find("method=md") != std::string::npos);
  }
}
