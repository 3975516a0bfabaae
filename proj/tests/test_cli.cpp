#include <catch2/catch_amalgamated.hpp>

#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "sci/mask.hpp"
#include "sci/scit_io.hpp"

// end-to-end checks of the installed command surface; every invocation goes
// through the real binary

namespace {

struct RunResult {
  int exit_code = -1;
  std::string out;
};

RunResult run(const std::string& args) {
  std::string out_path = "cli_stdout.tmp";
  std::string cmd = std::string(SCI_CLI_PATH) + " " + args + " > " + out_path +
                    " 2> cli_stderr.tmp";
  int rc = std::system(cmd.c_str());
  RunResult r;
  r.exit_code = WEXITSTATUS(rc);
  std::ifstream f(out_path);
  std::stringstream ss;
  ss << f.rdbuf();
  r.out = ss.str();
  return r;
}

bool file_exists(const std::string& path) {
  std::ifstream f(path);
  return f.good();
}

std::string slurp(const std::string& path) {
  std::ifstream f(path, std::ios::binary);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

std::vector<std::string> data_lines(const std::string& csv) {
  std::vector<std::string> rows;
  std::stringstream ss(csv);
  std::string line;
  while (std::getline(ss, line))
    if (!line.empty() && line[0] != '#') rows.push_back(line);
  return rows;
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> cells;
  std::stringstream ss(line);
  std::string c;
  while (std::getline(ss, c, sep)) cells.push_back(c);
  return cells;
}

struct Cleanup {
  std::vector<std::string> paths;
  ~Cleanup() {
    for (const auto& p : paths) std::remove(p.c_str());
    std::remove("cli_stdout.tmp");
    std::remove("cli_stderr.tmp");
  }
};

}  // namespace

TEST_CASE("full pipeline: synth, mask, forward, recover") {
  Cleanup c;
  c.paths = {"cli_x.scit", "cli_x.meta",  "cli_m.scit", "cli_m.meta",
             "cli_y.scit", "cli_y.meta",  "cli_r.scit", "cli_r.meta",
             "cli_t.csv"};

  RunResult s = run("synth --kind moving_square --dims 16x16x2 --seed 3 -o cli_x.scit");
  REQUIRE(s.exit_code == 0);
  REQUIRE(file_exists("cli_x.scit"));
  sci::DataCube x = sci::load_cube("cli_x.scit", 1.0);
  CHECK(x.frames() == 2);

  RunResult m = run("mask --model iid --p 0.4 --dims 16x16x2 --seed 7 -o cli_m.scit");
  REQUIRE(m.exit_code == 0);
  REQUIRE(file_exists("cli_m.meta"));
  sci::MaskCube mask = sci::load_mask("cli_m.scit");
  CHECK(mask.model.name() == "iid");
  CHECK(mask.seed == 7);

  RunResult f = run("forward --mask cli_m.scit --input cli_x.scit -o cli_y.scit");
  REQUIRE(f.exit_code == 0);
  sci::FrameImage y = sci::load_frame("cli_y.scit");
  CHECK(y.n1 == 16);

  RunResult r = run(
      "recover --mask cli_m.scit --measurement cli_y.scit --projector tv "
      "--max-iter 5 --truth cli_x.scit --trace cli_t.csv -o cli_r.scit");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("psnr_db=") != std::string::npos);
  sci::DataCube xr = sci::load_cube("cli_r.scit", 1.0);
  CHECK(xr.frames() == 2);

  auto rows = data_lines(slurp("cli_t.csv"));
  REQUIRE(rows.size() >= 2);
  CHECK(rows[0] == "iter,residual_l2,error_rms");
  CHECK(split(rows[1], ',').size() == 3);
}

TEST_CASE("dimension mismatches exit with the data error code") {
  Cleanup c;
  c.paths = {"cli_x8.scit", "cli_x8.meta", "cli_m8.scit", "cli_m8.meta",
             "cli_y8.scit", "cli_y8.meta", "cli_m16.scit", "cli_m16.meta",
             "cli_bad.scit"};
  REQUIRE(run("synth --kind moving_square --dims 8x8x2 --seed 3 -o cli_x8.scit").exit_code == 0);
  REQUIRE(run("mask --model iid --p 0.4 --dims 8x8x2 --seed 5 -o cli_m8.scit").exit_code == 0);
  REQUIRE(run("mask --model iid --p 0.4 --dims 16x16x2 --seed 5 -o cli_m16.scit").exit_code == 0);
  REQUIRE(run("forward --mask cli_m8.scit --input cli_x8.scit -o cli_y8.scit").exit_code == 0);

  CHECK(run("forward --mask cli_m16.scit --input cli_x8.scit -o cli_bad.scit").exit_code == 2);
  CHECK(run("recover --mask cli_m16.scit --measurement cli_y8.scit -o cli_bad.scit").exit_code == 2);
  CHECK(run("recover --mask cli_m8.scit --measurement cli_missing.scit -o cli_bad.scit").exit_code == 2);
}

TEST_CASE("usage problems exit 1") {
  CHECK(run("definitely-not-a-command").exit_code == 1);
  CHECK(run("bounds --theorem 9").exit_code == 1);
  CHECK(run("synth --kind nope --dims 4x4x1 -o x.scit").exit_code == 1);
  CHECK(run("mask --model iid --p 0.4 --dims 4x4").exit_code == 1);
  Cleanup c;
  c.paths = {};
  RunResult help = run("--help");
  CHECK(help.exit_code == 0);
  CHECK(help.out.find("synth") != std::string::npos);
}

TEST_CASE("guarantee sweep emits the pinned table") {
  Cleanup c;
  c.paths = {"cli_b.csv"};
  RunResult r = run(
      "bounds --theorem 1 --n 65536 --B 8 --r 1 --delta 0.01 --rho 1 --eta 1 "
      "--sweep-p 0.05:0.95:0.05 -o cli_b.csv");
  REQUIRE(r.exit_code == 0);
  auto rows = data_lines(slurp("cli_b.csv"));
  REQUIRE(rows.size() == 20);  // header + 19 grid points
  auto header = split(rows[0], ',');
  REQUIRE(header.size() >= 11);
  CHECK(header[0] == "theorem");
  CHECK(header[1] == "p");
  CHECK(header[6] == "bound");
  CHECK(header[10] == "convention");

  int argmin_col = -1;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == "argmin") argmin_col = static_cast<int>(i);
  REQUIRE(argmin_col >= 0);

  int flagged = 0;
  double argmin_p = 1.0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    auto cells = split(rows[i], ',');
    if (cells[argmin_col] == "1") {
      ++flagged;
      argmin_p = std::stod(cells[1]);
    }
  }
  CHECK(flagged == 1);
  CHECK(argmin_p < 0.5);
  CHECK(slurp("cli_b.csv").find("# ") == 0);  // provenance comes first
}

TEST_CASE("inapplicable parameter regions exit 3") {
  CHECK(run("bounds --theorem c4 --alpha 0.4 --epsilon 0.05").exit_code == 3);
  CHECK(run("bounds --theorem c12 --p 0.5 --q 0.2 --epsilon 0.05").exit_code == 3);
  CHECK(run("bounds --theorem 3 --lambda-min 0 --lambda-max 1 --epsilon 0.05").exit_code == 3);
}

TEST_CASE("single guarantee evaluations print their terms") {
  RunResult r = run("bounds --theorem 1 --n 1024 --B 4 --r 1 --delta 0.01 --rho 1 --eta 1 --p 0.4");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("bound=") != std::string::npos);
  CHECK(r.out.find("term_distortion=") != std::string::npos);
  CHECK(r.out.find("convention=eta") != std::string::npos);
  CHECK(r.out.find("p_star=") != std::string::npos);

  RunResult pgd = run("bounds --theorem pgd --n 1024 --B 4 --r 1 --delta 0.01 --rho 1 --lambda 0.05 --p 0.4");
  REQUIRE(pgd.exit_code == 0);
  CHECK(pgd.out.find("vacuous=1") != std::string::npos);

  RunResult budget = run("bounds --theorem c42 --n 8 --r 1 --delta 1 --rho 1 --kappa 1 --p 0.5");
  REQUIRE(budget.exit_code == 0);
  CHECK(budget.out.find("max_frames=2") != std::string::npos);
}

TEST_CASE("config files supply defaults, flags win") {
  Cleanup c;
  c.paths = {"cli_cfg.conf"};
  {
    std::ofstream f("cli_cfg.conf");
    f << "theorem = 1\n";
    f << "n = 1024\n";
    f << "B = 4\n";
    f << "p = 0.3\n";
  }
  RunResult r = run("bounds --config cli_cfg.conf");
  REQUIRE(r.exit_code == 0);
  CHECK(r.out.find("p=0.3") != std::string::npos);

  RunResult over = run("bounds --config cli_cfg.conf --p 0.45");
  REQUIRE(over.exit_code == 0);
  CHECK(over.out.find("p=0.45") != std::string::npos);
}

TEST_CASE("verification commands report their checks") {
  RunResult euj = run("verify euj --model iid --p 0.3 --B 3 --count 5 --seed 2");
  REQUIRE(euj.exit_code == 0);
  CHECK(euj.out.find("pass=true") != std::string::npos);

  Cleanup c;
  c.paths = {"cli_conc.csv"};
  RunResult conc = run(
      "verify concentration --model iid --p 0.5 --n 256 --B 2 --trials 50 "
      "--epsilon 0.1 --seed 4 -o cli_conc.csv");
  REQUIRE(conc.exit_code == 0);
  auto rows = data_lines(slurp("cli_conc.csv"));
  REQUIRE(rows.size() == 2);
  CHECK(rows[0] ==
        "model,params,n,B,epsilon,empirical_tail,bound_tail,vacuous_flag,pass");

  RunResult mean = run(
      "verify mean-estimator --model iid --p 0.4 --dims 12x12x2 --trials 40 "
      "--trials2 160 --seed 6");
  REQUIRE(mean.exit_code == 0);
  CHECK(mean.out.find("observed_ratio=") != std::string::npos);
}

TEST_CASE("sweeps write deterministic csv and svg") {
  Cleanup c;
  c.paths = {"cli_s.csv", "cli_s.svg"};
  std::string args =
      "sweep --axis p --grid 0.3,0.6 --metric bound_value --model iid "
      "--dims 8x8x2 --eta 1 --delta 0.01 --r 1 -o cli_s.csv --plot cli_s.svg";
  REQUIRE(run(args).exit_code == 0);
  std::string csv1 = slurp("cli_s.csv");
  std::string svg1 = slurp("cli_s.svg");
  REQUIRE(run(args).exit_code == 0);
  CHECK(slurp("cli_s.csv") == csv1);
  CHECK(slurp("cli_s.svg") == svg1);
  CHECK(slurp("cli_s.svg").rfind("<svg", 0) == 0);
  auto rows = data_lines(slurp("cli_s.csv"));
  REQUIRE(rows.size() == 3);
  CHECK(split(rows[0], ',')[0] == "axis_value");
}

TEST_CASE("recovery sweep over a tiny grid stays quick and seeded") {
  Cleanup c;
  c.paths = {"cli_ps.csv"};
  RunResult r = run(
      "sweep --axis p --grid 0.4,0.6 --metric psnr --trials 2 --dims 8x8x2 "
      "--max-iter 3 -o cli_ps.csv");
  REQUIRE(r.exit_code == 0);
  auto rows = data_lines(slurp("cli_ps.csv"));
  REQUIRE(rows.size() == 3);
  auto cells = split(rows[1], ',');
  CHECK(split(rows[0], ',').size() == cells.size());
}
