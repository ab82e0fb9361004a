// End-to-end tests driving the command-line binary. The path to the built
// executable arrives via the QUADOM_CLI environment variable (set by CTest).
#include <catch2/catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <sys/wait.h>

namespace fs = std::filesystem;

namespace {

std::string cli_path() {
    const char* p = std::getenv("QUADOM_CLI");
    REQUIRE(p != nullptr);
    return std::string(p);
}

struct TempDir {
    fs::path path;
    explicit TempDir(const std::string& tag) {
        static int counter = 0;
        path = fs::temp_directory_path() /
               ("quadom_cli_" + tag + "_" + std::to_string(++counter));
        fs::remove_all(path);
        fs::create_directories(path);
    }
    ~TempDir() { fs::remove_all(path); }
    std::string str() const { return path.string(); }
};

std::string slurp(const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    REQUIRE(in.good());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text(const fs::path& p, const std::string& text) {
    std::ofstream out(p, std::ios::binary);
    REQUIRE(out.good());
    out << text;
}

struct RunResult {
    int exit_code = -1;
    std::string out;
    std::string err;
};

// Run the binary with `args`, capturing exit code, stdout and stderr.
RunResult run_cli(const TempDir& dir, const std::string& args) {
    const fs::path out_file = dir.path / "stdout.txt";
    const fs::path err_file = dir.path / "stderr.txt";
    const std::string cmd = "\"" + cli_path() + "\" " + args + " > \"" +
                            out_file.string() + "\" 2> \"" + err_file.string() +
                            "\"";
    const int rc = std::system(cmd.c_str());
    RunResult r;
    r.exit_code = WIFEXITED(rc) ? WEXITSTATUS(rc) : -1;
    r.out = slurp(out_file);
    r.err = slurp(err_file);
    return r;
}

std::vector<std::string> data_rows(const std::string& csv) {
    std::vector<std::string> rows;
    std::istringstream in(csv);
    std::string line;
    while (std::getline(in, line))
        if (!line.empty() && line[0] != '#') rows.push_back(line);
    return rows;
}

std::vector<std::string> split_row(const std::string& row) {
    std::vector<std::string> cells;
    std::istringstream in(row);
    std::string cell;
    while (std::getline(in, cell, ',')) cells.push_back(cell);
    return cells;
}

} // namespace

TEST_CASE("help text lists every verb and exits cleanly") {
    TempDir dir("help");
    const auto r = run_cli(dir, "--help");
    CHECK(r.exit_code == 0);
    for (const char* verb : {"steady", "sweep", "spectrum", "stability", "verify"})
        CHECK(r.out.find(verb) != std::string::npos);
}

TEST_CASE("steady sweep writes a solved table with the expected populations") {
    TempDir dir("steady");
    write_text(dir.path / "run.cfg",
               "alpha_min = 100\nalpha_max = 1000\nalpha_points = 3\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --out \"" + dir.str() + "\" steady");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("steady: 3/3 points solved") != std::string::npos);

    const std::string csv = slurp(dir.path / "steady.csv");
    CHECK(csv.find("# include_nonstandard = true\n") != std::string::npos);
    CHECK(csv.find("# config_hash = ") != std::string::npos);
    CHECK(csv.find("## alpha,ratio,n_bar,m_bar,d_abs,branch,residual,status\n") !=
          std::string::npos);

    const auto rows = data_rows(csv);
    REQUIRE(rows.size() == 3);
    const auto last = split_row(rows.back());
    REQUIRE(last.size() == 8);
    CHECK(std::stod(last[0]) == Catch::Approx(1000.0).epsilon(1e-14));
    CHECK(std::stod(last[2]) == Catch::Approx(0.35158213847286973).epsilon(1e-12));
    CHECK(std::stod(last[3]) == Catch::Approx(19.380603384843258).epsilon(1e-12));
    CHECK(last[5] == "off_resonant");
    CHECK(std::stod(last[6]) < 1e-9);
    CHECK(last[7] == "ok");
}

TEST_CASE("dropping the momentum interaction changes the echoed config and the numbers") {
    TempDir dir("nononstd");
    write_text(dir.path / "run.cfg",
               "alpha_min = 1000\nalpha_max = 1000\nalpha_points = 1\n");
    const std::string base = "--config \"" + (dir.path / "run.cfg").string() + "\"";

    fs::create_directories(dir.path / "on");
    fs::create_directories(dir.path / "off");
    const auto r_on =
        run_cli(dir, base + " --out \"" + (dir.path / "on").string() + "\" steady");
    const auto r_off = run_cli(dir, base + " --no-nonstandard --out \"" +
                                        (dir.path / "off").string() + "\" steady");
    REQUIRE(r_on.exit_code == 0);
    REQUIRE(r_off.exit_code == 0);

    const std::string on = slurp(dir.path / "on" / "steady.csv");
    const std::string off = slurp(dir.path / "off" / "steady.csv");
    CHECK(on.find("# include_nonstandard = true\n") != std::string::npos);
    CHECK(off.find("# include_nonstandard = false\n") != std::string::npos);

    const auto row_on = split_row(data_rows(on).at(0));
    const auto row_off = split_row(data_rows(off).at(0));
    // the interaction feeds back on the populations, so both must move
    CHECK(std::stod(row_on[2]) != std::stod(row_off[2]));
    CHECK(std::stod(row_on[3]) != std::stod(row_off[3]));
}

TEST_CASE("sweep emits drive-major rows and is byte-identical across job counts") {
    TempDir dir("sweep");
    write_text(dir.path / "run.cfg",
               "alpha_min = 100\nalpha_max = 1000\nalpha_points = 3\n"
               "ratio_min = 0.5\nratio_max = 2\nratio_points = 3\n");
    const std::string base = "--config \"" + (dir.path / "run.cfg").string() + "\"";

    fs::create_directories(dir.path / "j1");
    fs::create_directories(dir.path / "j4");
    const auto r1 = run_cli(dir, base + " --jobs 1 --out \"" +
                                     (dir.path / "j1").string() + "\" sweep");
    const auto r4 = run_cli(dir, base + " --jobs 4 --out \"" +
                                     (dir.path / "j4").string() + "\" sweep");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r4.exit_code == 0);
    CHECK(r1.out.find("sweep: 9/9 points solved") != std::string::npos);

    const std::string csv1 = slurp(dir.path / "j1" / "sweep.csv");
    const std::string csv4 = slurp(dir.path / "j4" / "sweep.csv");
    CHECK(csv1 == csv4);

    const auto rows = data_rows(csv1);
    REQUIRE(rows.size() == 9);
    double prev_alpha = 0.0;
    for (const auto& row : rows) {
        const double a = std::stod(split_row(row)[0]);
        CHECK(a >= prev_alpha);
        prev_alpha = a;
    }
}

TEST_CASE("stability map reports the first unstable cell") {
    TempDir dir("stab");
    write_text(dir.path / "run.cfg",
               "map_n_min = 0\nmap_n_max = 100\nmap_n_points = 5\n"
               "map_m_min = 0\nmap_m_max = 100\nmap_m_points = 5\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --out \"" + dir.str() + "\" stability");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("first unstable cell:") != std::string::npos);
    CHECK(r.out.find("cells stable") != std::string::npos);

    const auto rows = data_rows(slurp(dir.path / "stability_map.csv"));
    REQUIRE(rows.size() == 25);
    // origin cell: empty system, margin set by the weaker loss channel
    const auto first = split_row(rows.front());
    CHECK(std::stod(first[0]) == 0.0);
    CHECK(std::stod(first[1]) == 0.0);
    CHECK(std::stod(first[2]) < 0.0);
    CHECK(first[3] == "stable");
}

TEST_CASE("spectrum run emits paired spectra, peaks and the difference summary") {
    TempDir dir("spectrum");
    write_text(dir.path / "run.cfg",
               "freq_points = 2048\ncluster_points_per_side = 12\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --jobs 2 --out \"" + dir.str() +
                                    "\" spectrum");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("spectrum: relative L2 difference (on vs off) = ") !=
          std::string::npos);

    for (const char* stem : {"spectrum_nonstandard_on", "spectrum_nonstandard_off",
                             "spectrum_peaks", "spectrum_diff"})
        CHECK(fs::exists(dir.path / (std::string(stem) + ".csv")));

    SECTION("the interaction moves the output spectrum by more than a tenth in L2") {
        const auto diff = split_row(data_rows(slurp(dir.path / "spectrum_diff.csv")).at(0));
        REQUIRE(diff.size() == 5);
        CHECK(std::stod(diff[0]) > 0.10);
        CHECK(std::stod(diff[1]) >= 1.0); // peaks found with the interaction on
        CHECK(std::stod(diff[2]) >= 1.0); // and with it off
        CHECK(std::stod(diff[3]) == 0.0); // no singular-grid warnings
        CHECK(std::stod(diff[4]) == 0.0);
    }

    SECTION("frequency column ascends and stays positive") {
        const auto rows = data_rows(slurp(dir.path / "spectrum_nonstandard_on.csv"));
        REQUIRE(rows.size() >= 2048);
        double prev = 0.0;
        bool ordered = true;
        for (const auto& row : rows) {
            const double f = std::stod(split_row(row)[0]);
            ordered = ordered && f > prev;
            prev = f;
        }
        CHECK(ordered);
    }

    SECTION("fitted peaks sit near half the effective mechanical frequency") {
        const auto rows = data_rows(slurp(dir.path / "spectrum_peaks.csv"));
        REQUIRE(rows.size() >= 2);
        for (const auto& row : rows) {
            const auto cells = split_row(row);
            REQUIRE(cells.size() == 8);
            const double center = std::stod(cells[2]);
            const double half = std::stod(cells[3]);
            CHECK(half == Catch::Approx(0.5 * center));
            // effective mechanical frequency is near the bare 2*pi*720 kHz
            CHECK(center == Catch::Approx(2.0 * 3.141592653589793 * 1.44e6).epsilon(0.05));
        }
    }
}

TEST_CASE("spectrum refuses a dynamically unstable configuration") {
    TempDir dir("unstable");
    write_text(dir.path / "run.cfg",
               "ratio = 1\nepsilon = 500\nalpha = 10000\n"
               "freq_points = 256\ncluster_points_per_side = 4\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --out \"" + dir.str() + "\" spectrum");
    CHECK(r.exit_code == 4);
    CHECK(r.err.find("dynamically unstable") != std::string::npos);
    CHECK(fs::exists(dir.path / "stability_report.csv"));
    CHECK_FALSE(fs::exists(dir.path / "spectrum_nonstandard_on.csv"));

    const auto rows = data_rows(slurp(dir.path / "stability_report.csv"));
    REQUIRE(rows.size() == 12); // six eigenvalues per interaction mode
    bool saw_unstable = false;
    for (const auto& row : rows)
        saw_unstable = saw_unstable || split_row(row)[1] == "unstable";
    CHECK(saw_unstable);
}

TEST_CASE("momentum-free spectrum stays reachable when the full model is unstable") {
    TempDir dir("offonly");
    write_text(dir.path / "run.cfg",
               "ratio = 1\nepsilon = 500\nalpha = 10000\n"
               "freq_points = 256\ncluster_points_per_side = 4\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --no-nonstandard --out \"" + dir.str() +
                                    "\" spectrum");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("momentum-free mode only") != std::string::npos);
    CHECK(fs::exists(dir.path / "spectrum_nonstandard_off.csv"));
    CHECK(fs::exists(dir.path / "spectrum_peaks.csv"));
    CHECK_FALSE(fs::exists(dir.path / "spectrum_nonstandard_on.csv"));
    CHECK_FALSE(fs::exists(dir.path / "spectrum_diff.csv"));

    for (const auto& row : data_rows(slurp(dir.path / "spectrum_peaks.csv")))
        CHECK(split_row(row)[0] == "nonstandard_off");
}

TEST_CASE("verify passes its oracle suite on a well-conditioned configuration") {
    TempDir dir("verify");
    write_text(dir.path / "run.cfg",
               "omega = 20000\nOmega = 12000\nkappa = 300\nGamma = 10\n"
               "epsilon = 5\nalpha = 500\ntemperature = 0.001\n"
               "verify_cutoff = 16\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --out \"" + dir.str() + "\" verify");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS closure:") != std::string::npos);
    CHECK(r.out.find("PASS hamiltonian:") != std::string::npos);
    CHECK(r.out.find("PASS steady vs relaxation flow:") != std::string::npos);

    const auto rows = data_rows(slurp(dir.path / "verify_report.csv"));
    REQUIRE(rows.size() >= 11);
    for (const auto& row : rows) {
        const auto cells = split_row(row);
        REQUIRE(cells.size() == 4);
        CHECK(cells[3] == "pass");
    }
}

TEST_CASE("configuration and usage errors exit with code 2") {
    TempDir dir("errors");

    SECTION("unknown config key, with the offending line number") {
        write_text(dir.path / "bad.cfg", "alpha = 10\nnot_a_key = 1\n");
        const auto r = run_cli(dir, "--config \"" + (dir.path / "bad.cfg").string() +
                                        "\" --out \"" + dir.str() + "\" steady");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("line 2") != std::string::npos);
        CHECK(r.err.find("not_a_key") != std::string::npos);
    }

    SECTION("malformed number") {
        write_text(dir.path / "bad.cfg", "alpha = 12q\n");
        const auto r = run_cli(dir, "--config \"" + (dir.path / "bad.cfg").string() +
                                        "\" --out \"" + dir.str() + "\" steady");
        CHECK(r.exit_code == 2);
    }

    SECTION("missing config file") {
        const auto r = run_cli(dir, "--config \"" + (dir.path / "ghost.cfg").string() +
                                        "\" --out \"" + dir.str() + "\" steady");
        CHECK(r.exit_code == 2);
        CHECK(r.err.find("cannot open config file") != std::string::npos);
    }

    SECTION("unexpected flag") {
        const auto r = run_cli(dir, "--badflag steady");
        CHECK(r.exit_code == 2);
    }

    SECTION("missing subcommand") {
        const auto r = run_cli(dir, "");
        CHECK(r.exit_code == 2);
    }

    SECTION("invalid physical parameter") {
        write_text(dir.path / "bad.cfg", "kappa = -3\n");
        const auto r = run_cli(dir, "--config \"" + (dir.path / "bad.cfg").string() +
                                        "\" --out \"" + dir.str() + "\" steady");
        CHECK(r.exit_code == 2);
    }
}

TEST_CASE("shared flags parse on either side of the verb") {
    TempDir dir("flagorder");
    write_text(dir.path / "run.cfg", "alpha_points = 1\n");
    const std::string cfg = (dir.path / "run.cfg").string();
    const auto r1 = run_cli(dir, "--config \"" + cfg + "\" --out \"" +
                                     (dir.path / "a").string() + "\" steady");
    const auto r2 = run_cli(dir, "steady --config \"" + cfg + "\" --out \"" +
                                     (dir.path / "b").string() + "\"");
    REQUIRE(r1.exit_code == 0);
    REQUIRE(r2.exit_code == 0);
    CHECK(slurp(dir.path / "a" / "steady.csv") == slurp(dir.path / "b" / "steady.csv"));
}

TEST_CASE("output directories are created; unwritable targets exit with the runtime code") {
    TempDir dir("nodir");
    write_text(dir.path / "run.cfg", "alpha_points = 1\n");
    const std::string cfg = "--config \"" + (dir.path / "run.cfg").string() + "\" ";

    SECTION("a missing nested output directory is created on demand") {
        const auto r = run_cli(dir, cfg + "--out \"" +
                                        (dir.path / "missing" / "deeper").string() +
                                        "\" steady");
        CHECK(r.exit_code == 0);
        CHECK(fs::exists(dir.path / "missing" / "deeper" / "steady.csv"));
    }

    SECTION("a target blocked by a regular file exits with the runtime code") {
        write_text(dir.path / "blocker", "not a directory\n");
        const auto r = run_cli(dir, cfg + "--out \"" +
                                        (dir.path / "blocker" / "sub").string() +
                                        "\" steady");
        CHECK(r.exit_code == 3);
        CHECK(r.err.find("cannot open output file") != std::string::npos);
    }
}

TEST_CASE("identical invocations reproduce the output bytes exactly") {
    TempDir dir("repro");
    write_text(dir.path / "run.cfg",
               "alpha_min = 50\nalpha_max = 5000\nalpha_points = 5\n"
               "freq_points = 512\ncluster_points_per_side = 6\n");
    const std::string base = "--config \"" + (dir.path / "run.cfg").string() + "\"";

    fs::create_directories(dir.path / "r1");
    fs::create_directories(dir.path / "r2");
    for (const char* sub : {"r1", "r2"}) {
        const auto rs = run_cli(dir, base + " --out \"" + (dir.path / sub).string() +
                                         "\" steady");
        REQUIRE(rs.exit_code == 0);
        const auto rp = run_cli(dir, base + " --jobs 3 --out \"" +
                                         (dir.path / sub).string() + "\" spectrum");
        REQUIRE(rp.exit_code == 0);
    }
    for (const char* name :
         {"steady.csv", "spectrum_nonstandard_on.csv", "spectrum_nonstandard_off.csv",
          "spectrum_peaks.csv", "spectrum_diff.csv"})
        CHECK(slurp(dir.path / "r1" / name) == slurp(dir.path / "r2" / name));
}

TEST_CASE("json output format carries the same table") {
    TempDir dir("json");
    write_text(dir.path / "run.cfg",
               "alpha_min = 1000\nalpha_max = 1000\nalpha_points = 1\n"
               "out_format = json\n");
    const auto r = run_cli(dir, "--config \"" + (dir.path / "run.cfg").string() +
                                    "\" --out \"" + dir.str() + "\" steady");
    REQUIRE(r.exit_code == 0);
    CHECK(r.out.find("steady.json") != std::string::npos);
    CHECK_FALSE(fs::exists(dir.path / "steady.csv"));

    const std::string js = slurp(dir.path / "steady.json");
    CHECK(js.find("\"config_hash\"") != std::string::npos);
    CHECK(js.find("\"rows\"") != std::string::npos);
    CHECK(js.find("\"n_bar\"") != std::string::npos);
}
