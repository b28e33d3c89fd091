#include <catch2/catch_amalgamated.hpp>

#include <sys/wait.h>

#include <cstdlib>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

namespace {

struct RunResult {
    int exit_code;
    std::string out;
    std::string err;
};

std::string slurp(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void spit(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    REQUIRE(out.good());
    out << content;
}

const std::string& tmpdir() {
    static std::string dir = [] {
        char tmpl[] = "/tmp/plpcliXXXXXX";
        char* d = mkdtemp(tmpl);
        REQUIRE(d != nullptr);
        return std::string(d);
    }();
    return dir;
}

RunResult run(const std::string& args) {
    static int counter = 0;
    std::string out_path = tmpdir() + "/out" + std::to_string(counter);
    std::string err_path = tmpdir() + "/err" + std::to_string(counter);
    counter++;
    std::string cmd = std::string(PLPMLE_BIN) + " " + args + " >" + out_path +
                      " 2>" + err_path;
    int status = std::system(cmd.c_str());
    REQUIRE(status != -1);
    int code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return {code, slurp(out_path), slurp(err_path)};
}

std::string programs(const std::string& name) {
    return std::string(PLP_SOURCE_DIR) + "/programs/" + name;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

std::vector<double> grep_values(const std::string& text,
                                const std::string& key) {
    std::vector<double> vals;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line)) {
        if (line.rfind(key, 0) != 0) continue;
        std::size_t eq = line.find('=', key.size() ? key.size() - 1 : 0);
        if (eq == std::string::npos) eq = key.size() - 1;
        vals.push_back(std::strtod(line.c_str() + eq + 1, nullptr));
    }
    return vals;
}

int count_lines(const std::string& text, const std::string& exact) {
    int n = 0;
    std::istringstream lines(text);
    std::string line;
    while (std::getline(lines, line))
        if (line == exact) n++;
    return n;
}

}  // namespace

TEST_CASE("learn direct on the bundled two-clause example") {
    RunResult r = run("learn --program " + programs("two_clause.pl") +
                      " --data " + programs("two_clause_data.csv"));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "method=direct"));
    CHECK(contains(r.out, "group.h.method=closed_form"));
    CHECK(contains(r.out, "group.h.identifiable=true"));
    CHECK(contains(r.out, "loglik=-7.2712698"));
    CHECK(contains(r.out, "n_params=2"));
    CHECK(contains(r.out, "0.250000::h."));
    CHECK(contains(r.out, "0.333333::h :- b."));
    CHECK(r.err.empty());
}

TEST_CASE("learn em on the same data approaches the same likelihood") {
    RunResult r = run("learn --method both --program " +
                      programs("two_clause.pl") + " --data " +
                      programs("two_clause_data.csv"));
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "method=direct"));
    CHECK(contains(r.out, "method=em"));
    CHECK(contains(r.out, "group.h.method=em"));
    auto ls = grep_values(r.out, "loglik=");
    REQUIRE(ls.size() == 2);
    CHECK(std::abs(ls[0] - ls[1]) <= 1e-3);
    // the fitted program comes from the direct fit when both run
    CHECK(contains(r.out, "0.250000::h."));
}

TEST_CASE("learn with nothing to learn says so") {
    std::string prog = tmpdir() + "/fixed.pl";
    std::string data = tmpdir() + "/fixed.csv";
    spit(prog, "0.4::h.\n");
    spit(data, "h\n1\n0\n0\n");
    RunResult r = run("learn --program " + prog + " --data " + data);
    CHECK(r.exit_code == 0);
    CHECK(contains(r.out, "note=nothing to learn"));
    CHECK(contains(r.out, "n_params=0"));
    CHECK(contains(r.out, "0.4::h."));
}

TEST_CASE("learn can sample its own training data") {
    RunResult r = run("learn --program " + programs("alarm.pl") +
                      " --constants a,b --sample-n 2000 --seed 7");
    CHECK(r.exit_code == 0);
    auto thetas = grep_values(r.out, "theta.");
    // six parameters, all strictly inside the unit interval
    // (theta.N= lines: prefix match grabs each once)
    REQUIRE(thetas.size() == 6);
    std::vector<double> truth{0.1, 0.2, 0.3, 0.6, 0.7, 0.8};
    for (std::size_t i = 0; i < 6; ++i)
        CHECK(std::abs(thetas[i] - truth[i]) < 0.1);
}

TEST_CASE("learn writes the fitted program to a file that reloads") {
    std::string fit = tmpdir() + "/fitted.pl";
    RunResult r = run("learn --program " + programs("two_clause.pl") +
                      " --data " + programs("two_clause_data.csv") + " --out " +
                      fit);
    CHECK(r.exit_code == 0);
    CHECK_FALSE(contains(r.out, "0.250000::h."));  // went to the file
    std::string fitted = slurp(fit);
    CHECK(contains(fitted, "0.250000::h."));
    CHECK(contains(fitted, "0.333333::h :- b."));

    // fitted programs are fully fixed: learning them again is a no-op
    std::string data = tmpdir() + "/round.csv";
    spit(data, "h,b\n0,0\n1,1\n");
    RunResult r2 = run("learn --program " + fit + " --data " + data);
    CHECK(r2.exit_code == 0);
    CHECK(contains(r2.out, "note=nothing to learn"));
}

TEST_CASE("learn exit codes") {
    std::string bad = tmpdir() + "/bad.pl";
    spit(bad, "p :- q,\n.\n");
    RunResult r1 = run("learn --program " + bad + " --sample-n 5");
    CHECK(r1.exit_code == 1);
    CHECK(contains(r1.err, "error:"));
    CHECK(contains(r1.err, "bad.pl:2:"));

    std::string prog = tmpdir() + "/rule.pl";
    std::string data = tmpdir() + "/impossible.csv";
    spit(prog, "t(_)::h :- b.\n0.5::b.\n");
    spit(data, "h,b\n1,0\n0,1\n");
    RunResult r2 = run("learn --program " + prog + " --data " + data);
    CHECK(r2.exit_code == 2);
    CHECK(contains(r2.err, "error: inconsistent data:"));
    CHECK(contains(r2.err, "'h'"));

    RunResult r3 = run("learn --program " + prog + " --data " + data +
                       " --on-inconsistent drop");
    CHECK(r3.exit_code == 0);
    CHECK(contains(r3.err, "warning: dropped 1 inconsistent record"));
    CHECK(contains(r3.out, "dropped_records=1"));

    // missing data source
    RunResult r4 = run("learn --program " + prog);
    CHECK(r4.exit_code == 1);

    // --data and --sample-n are mutually exclusive
    RunResult r5 = run("learn --program " + prog + " --data " + data +
                       " --sample-n 5");
    CHECK(r5.exit_code != 0);
}

TEST_CASE("em trace lands in a csv file") {
    std::string trace = tmpdir() + "/trace.csv";
    RunResult r = run("learn --method em --program " +
                      programs("two_clause.pl") + " --data " +
                      programs("two_clause_data.csv") + " --trace " + trace);
    CHECK(r.exit_code == 0);
    std::string csv = slurp(trace);
    CHECK(csv.rfind("iteration,loglik,delta,theta0,theta1\n", 0) == 0);
    CHECK(count_lines(csv, "") == 0);
}

TEST_CASE("sample is reproducible and well-formed") {
    std::string f1 = tmpdir() + "/s1.txt";
    std::string f2 = tmpdir() + "/s2.txt";
    RunResult r1 = run("sample --program " + programs("alarm.pl") +
                       " --constants a,b --n 25 --seed 9 --out " + f1);
    RunResult r2 = run("sample --program " + programs("alarm.pl") +
                       " --constants a,b --n 25 --seed 9 --out " + f2);
    CHECK(r1.exit_code == 0);
    CHECK(r2.exit_code == 0);
    std::string s1 = slurp(f1);
    CHECK(s1 == slurp(f2));
    CHECK(s1.rfind("# seed=9 generator=mt19937_64\n", 0) == 0);
    CHECK(count_lines(s1, "---") == 25);

    RunResult r3 = run("sample --program " + programs("alarm.pl") +
                       " --constants a,b --n 25 --seed 10 --out " + f2);
    CHECK(r3.exit_code == 0);
    CHECK(s1 != slurp(f2));
}

TEST_CASE("sampled data feeds back into learning") {
    std::string data = tmpdir() + "/alarm_data.txt";
    RunResult r1 = run("sample --program " + programs("alarm.pl") +
                       " --constants a,b,c --n 400 --seed 31 --out " + data);
    REQUIRE(r1.exit_code == 0);
    RunResult r2 = run("learn --program " + programs("alarm.pl") +
                       " --constants a,b,c --data " + data);
    CHECK(r2.exit_code == 0);
    auto thetas = grep_values(r2.out, "theta.");
    REQUIRE(thetas.size() == 6);
    for (double t : thetas) {
        CHECK(t > 0.0);
        CHECK(t < 1.0);
    }
}

TEST_CASE("sample block shape matches the grounding") {
    RunResult r = run("sample --program " + programs("alarm.pl") +
                      " --constants a,b,c,d,e --n 100 --seed 3");
    CHECK(r.exit_code == 0);
    CHECK(count_lines(r.out, "---") == 100);
    // 5 fire + 5 burglary + 25 neighbor + 5 alarm + 25 calls = 65 atom lines
    std::istringstream lines(r.out);
    std::string line;
    std::getline(lines, line);  // header
    int in_block = 0;
    while (std::getline(lines, line)) {
        if (line == "---") {
            CHECK(in_block == 65);
            in_block = 0;
        } else {
            in_block++;
        }
    }
    CHECK(in_block == 0);
}

TEST_CASE("bench produces the sweep csv and gnuplot files") {
    std::string csv = tmpdir() + "/bench.csv";
    RunResult r = run("bench --program " + programs("alarm.pl") +
                      " --mode relational --sizes 2,3 --seed 5 --n 30 --out " +
                      csv);
    CHECK(r.exit_code == 0);
    std::string text = slurp(csv);
    std::istringstream lines(text);
    std::string line;
    REQUIRE(std::getline(lines, line));
    CHECK(line == "method,size,wall_time_s,loglik,iterations");
    std::vector<std::string> rows;
    while (std::getline(lines, line)) rows.push_back(line);
    REQUIRE(rows.size() == 4);
    CHECK(rows[0].rfind("direct,2,", 0) == 0);
    CHECK(rows[1].rfind("em,2,", 0) == 0);
    CHECK(rows[2].rfind("direct,3,", 0) == 0);
    CHECK(rows[3].rfind("em,3,", 0) == 0);

    std::string direct_dat = slurp(tmpdir() + "/bench_direct.dat");
    std::string em_dat = slurp(tmpdir() + "/bench_em.dat");
    CHECK(count_lines(direct_dat, "") == 0);
    REQUIRE_FALSE(direct_dat.empty());
    REQUIRE_FALSE(em_dat.empty());
    CHECK(direct_dat.rfind("2 ", 0) == 0);
    CHECK(contains(em_dat, "\n3 "));
}

TEST_CASE("bench propositional mode scales the record count") {
    std::string csv = tmpdir() + "/pbench.csv";
    RunResult r = run("bench --program " + programs("powerplant.pl") +
                      " --mode propositional --sizes 50,100 --seed 8 --out " +
                      csv);
    CHECK(r.exit_code == 0);
    std::string text = slurp(csv);
    CHECK(count_lines(text, "method,size,wall_time_s,loglik,iterations") == 1);
    std::istringstream lines(text);
    std::string line;
    std::getline(lines, line);
    int rows = 0;
    while (std::getline(lines, line)) {
        CHECK((line.rfind("direct,", 0) == 0 || line.rfind("em,", 0) == 0));
        rows++;
    }
    CHECK(rows == 4);
}
