#include "doctest.h"

#include "recdual/dual_field.hpp"
#include "recdual/model.hpp"
#include "recdual/run.hpp"
#include "recdual/text_io.hpp"
#include "test_support.hpp"

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

using namespace recdual;

namespace {

struct CliResult {
    int rc = -1;
    std::string out, err;
};

CliResult cli(const std::vector<std::string>& args) {
    std::ostringstream out, err;
    CliResult r;
    r.rc = run(args, out, err);
    r.out = out.str();
    r.err = err.str();
    return r;
}

// second line of a CSV, split into doubles; stops at the first cell that is
// not a number (e.g. the boolean columns of the dominance table)
Vec csv_row(const std::string& text) {
    std::istringstream ss(text);
    std::string line;
    std::getline(ss, line);
    std::getline(ss, line);
    Vec vals;
    std::istringstream row(line);
    std::string cell;
    while (std::getline(row, cell, ',')) {
        try {
            vals.push_back(parse_double(cell));
        } catch (const std::exception&) {
            break;
        }
    }
    return vals;
}

std::string example1_path() { return testsup::models_dir() + "/example1.model"; }

// a solved one-action field on disk, produced once through the CLI itself
struct TinySolved {
    std::string model = testsup::scratch("cli_one.model");
    std::string field = testsup::scratch("cli_one_field.bin");
    int rc = -1;
};

const TinySolved& tiny() {
    static const TinySolved t = [] {
        TinySolved out;
        save_model(testsup::one_action_model(), out.model);
        out.rc = cli({"solve", out.model, "--out", out.field, "--grid-n", "5", "--gamma-max",
                      "2", "--grid-kind", "uniform", "--tol", "1e-9", "--threads", "1"})
                     .rc;
        return out;
    }();
    return t;
}

} // namespace

TEST_SUITE("cli") {

TEST_CASE("validate: shipped model passes, bad inputs map to exit codes") {
    const CliResult ok = cli({"validate", example1_path()});
    CHECK(ok.rc == 0);
    CHECK(ok.out.rfind("ok:", 0) == 0);
    CHECK(ok.out.find("states=2") != std::string::npos);
    CHECK(ok.out.find("beta=0.4") != std::string::npos);

    const CliResult missing = cli({"validate", testsup::scratch("no_such.model")});
    CHECK(missing.rc == 3);
    CHECK(missing.err.find("error:") != std::string::npos);

    // structurally readable but semantically broken: transition row sums 0.9
    ModelSpec bad = testsup::one_action_model();
    bad.transition = {0.9};
    const std::string bad_path = testsup::scratch("cli_bad.model");
    save_model(bad, bad_path);
    const CliResult invalid = cli({"validate", bad_path});
    CHECK(invalid.rc == 1);
    CHECK(invalid.out.find("row") != std::string::npos);
}

TEST_CASE("example: oracle values as CSV on stdout and to a file") {
    const CliResult e1 = cli({"example", "1"});
    REQUIRE(e1.rc == 0);
    CHECK(e1.out.rfind("V0,V1,V2\n", 0) == 0);
    const Vec v1 = csv_row(e1.out);
    REQUIRE(v1.size() == 3);
    CHECK(v1[0] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(v1[1] == doctest::Approx(0.4).epsilon(1e-12));
    CHECK(v1[2] == doctest::Approx(0.25 / 0.6).epsilon(1e-12));

    const CliResult e1b = cli({"example", "1", "--beta", "0.49"});
    REQUIRE(e1b.rc == 0);
    CHECK(csv_row(e1b.out)[2] == doctest::Approx(0.25 / 0.51).epsilon(1e-12));

    // outside the closed forms' validity: validation failure, not a crash
    CHECK(cli({"example", "1", "--beta", "0.6"}).rc == 1);

    const CliResult e2 = cli({"example", "2", "--sigma", "0.1"});
    REQUIRE(e2.rc == 0);
    CHECK(e2.out.rfind("sigma,beta,c_star,k,V\n", 0) == 0);
    const Vec v2 = csv_row(e2.out);
    REQUIRE(v2.size() == 5);
    CHECK(v2[1] == doctest::Approx(0.451472634637746).epsilon(1e-12));
    CHECK(v2[4] == doctest::Approx(1.2703784).epsilon(1e-6));
    CHECK(cli({"example", "2", "--sigma", "0.5"}).rc == 1);

    const std::string out_csv = testsup::scratch("example2.csv");
    const CliResult e2f = cli({"example", "2", "--out", out_csv});
    CHECK(e2f.rc == 0);
    const std::string file_text = read_file(out_csv);
    CHECK(file_text == e2f.out);
    const std::string man = read_file(out_csv + ".manifest");
    CHECK(man.find("status=ok") != std::string::npos);
    CHECK(man.find("V=") != std::string::npos);
    CHECK(man.find("version=") != std::string::npos);
}

TEST_CASE("solve: field file, manifest, and convergence reporting") {
    const TinySolved& t = tiny();
    REQUIRE(t.rc == 0);

    const DualValueField f = load_field(t.field);
    double g = 1.0;
    CHECK(f.evaluate(0, 0, &g) == doctest::Approx(4.0).epsilon(1e-6)); // 2 (1 + gamma)
    const std::string man = read_file(t.field + ".manifest");
    CHECK(man.find("status=ok") != std::string::npos);
    CHECK(man.find("converged=true") != std::string::npos);
    CHECK(man.find("command=recdual solve") != std::string::npos);
    CHECK(man.find("iterations=") != std::string::npos);

    // an exhausted sweep budget is a distinct exit code, field still written
    const std::string short_field = testsup::scratch("cli_short_field.bin");
    const CliResult nc = cli({"solve", t.model, "--out", short_field, "--grid-n", "5",
                              "--gamma-max", "2", "--grid-kind", "uniform", "--tol", "1e-12",
                              "--max-iter", "1", "--threads", "1"});
    CHECK(nc.rc == 2);
    CHECK(nc.err.find("did not reach") != std::string::npos);
    CHECK(read_file(short_field + ".manifest").find("status=non-converged") !=
          std::string::npos);
    CHECK(load_field(short_field).nodes() > 0);

    // unwritable output location surfaces as an I/O failure
    const CliResult io = cli({"solve", t.model, "--out", "/nonexistent_dir/f.bin", "--grid-n",
                              "5", "--gamma-max", "2", "--threads", "1"});
    CHECK(io.rc == 3);
    CHECK(io.err.find("error:") != std::string::npos);
}

TEST_CASE("policy: stage lottery CSV with residual certification") {
    const TinySolved& t = tiny();
    REQUIRE(t.rc == 0);
    const std::string stage_csv = testsup::scratch("cli_stage.csv");
    const CliResult r = cli({"policy", t.model, t.field, "--x", "0", "--s", "0", "--iters",
                             "800", "--out", stage_csv});
    REQUIRE(r.rc == 0);
    CHECK(r.out.find("support=") != std::string::npos);
    CHECK(r.out.find("worst_residual=") != std::string::npos);
    const std::string csv = read_file(stage_csv);
    CHECK(csv.rfind("action,prob,shock_next,promise0\n", 0) == 0);
    const std::string man = read_file(stage_csv + ".manifest");
    CHECK(man.find("lambda_star0=") != std::string::npos);
    CHECK(man.find("worst_residual=") != std::string::npos);
    CHECK(man.find("status=ok") != std::string::npos);

    // state index outside the model
    CHECK(cli({"policy", t.model, t.field, "--x", "5", "--out",
               testsup::scratch("cli_badx.csv")})
              .rc == 1);
}

TEST_CASE("simulate: deterministic chained paths, manifest scalars") {
    const TinySolved& t = tiny();
    REQUIRE(t.rc == 0);
    const std::string csv_a = testsup::scratch("cli_paths_a.csv");
    const std::string csv_b = testsup::scratch("cli_paths_b.csv");
    const std::vector<std::string> base = {"simulate", t.model, t.field,  "--paths", "200",
                                           "--horizon", "8",    "--seed", "3",       "--iters",
                                           "400"};
    std::vector<std::string> run_a = base;
    for (const char* s : {"--threads", "1", "--out"}) run_a.push_back(s);
    run_a.push_back(csv_a);
    const CliResult a = cli(run_a);
    REQUIRE(a.rc == 0);
    CHECK(a.out.find("simulated 200 paths") != std::string::npos);

    std::vector<std::string> run_b = base;
    for (const char* s : {"--threads", "4", "--out"}) run_b.push_back(s);
    run_b.push_back(csv_b); // same seed, more workers: bytes must not move
    const CliResult b = cli(run_b);
    REQUIRE(b.rc == 0);

    const std::string bytes_a = read_file(csv_a);
    CHECK(bytes_a == read_file(csv_b));
    CHECK(bytes_a.rfind("path_id,t,shock,action,reward,g0,promise0,discounted_objective\n", 0) ==
          0);

    // one action and one shock: every path earns exactly 2 (1 - 0.5^8)
    const std::string man = read_file(csv_a + ".manifest");
    CHECK(man.find("value_ok=true") != std::string::npos);
    CHECK(man.find("mean_objective=1.9921875") != std::string::npos);
    CHECK(man.find("stage_cache_entries=") != std::string::npos);
}

TEST_CASE("ramsey subcommands: CSV outputs and headline manifest keys") {
    const std::string curves_csv = testsup::scratch("cli_fig1.csv");
    const CliResult curves = cli({"ramsey", "curves", "--out", curves_csv});
    REQUIRE(curves.rc == 0);
    const std::string ct = read_file(curves_csv);
    CHECK(ct.rfind("ell,f_g0,f_g2,welfare_g0\n", 0) == 0);
    CHECK(std::count(ct.begin(), ct.end(), '\n') > 100);
    CHECK(read_file(curves_csv + ".manifest").find("max_debt_g2=") != std::string::npos);

    const std::string scatter_csv = testsup::scratch("cli_fig2.csv");
    const CliResult scatter =
        cli({"ramsey", "scatter", "--lottery", "--out", scatter_csv});
    REQUIRE(scatter.rc == 0);
    const std::string st = read_file(scatter_csv);
    CHECK(st.rfind("b,ell0,ell1,ell2,pi1,revenue,welfare\n", 0) == 0);
    CHECK(std::count(st.begin(), st.end(), '\n') > 10);

    const CliResult dom = cli({"ramsey", "dominance", "--b-init", "0.45"});
    REQUIRE(dom.rc == 0);
    CHECK(dom.out.rfind("target,best_det,best_lottery,margin,feasible_det,feasible_lottery,"
                        "dominates\n",
                        0) == 0);
    CHECK(dom.out.find("true") != std::string::npos);
    const Vec row = csv_row(dom.out); // parses through the margin column
    REQUIRE(row.size() >= 4);
    CHECK(row[0] == 0.45);
    CHECK(row[3] > 1e-3);

    // unattainable revenue target (plans top out near 0.915): exit 1
    const CliResult far = cli({"ramsey", "dominance", "--b-init", "0.95"});
    CHECK(far.rc == 1);
    CHECK(far.out.find("false") != std::string::npos);
    CHECK(far.err.find("error:") != std::string::npos);
}

TEST_CASE("argument and compatibility errors") {
    CHECK(cli({"bogus"}).rc == 1);
    CHECK(cli({"solve"}).rc == 1);       // missing required model argument
    CHECK(cli({}).rc == 1);              // no subcommand
    CHECK(cli({"--help"}).rc == 0);      // help is a successful exit

    // a field whose shape does not match the model is rejected up front
    const TinySolved& t = tiny();
    REQUIRE(t.rc == 0);
    DualValueField other = load_field(t.field);
    other.n_states = 2;
    other.values.resize(2 * other.values.size());
    const std::string other_path = testsup::scratch("cli_other_field.bin");
    save_field(other, other_path);
    const CliResult mism =
        cli({"policy", t.model, other_path, "--out", testsup::scratch("cli_mism.csv")});
    CHECK(mism.rc == 1);
    CHECK(mism.err.find("dimensions") != std::string::npos);

    // simulate shares the same phi validation as the library call
    CHECK(cli({"simulate", t.model, t.field, "--phi", "1,2", "--paths", "10", "--horizon", "2",
               "--out", testsup::scratch("cli_badphi.csv")})
              .rc == 1);
}

} // TEST_SUITE
