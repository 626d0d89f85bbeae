#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <numbers>
#include <random>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include <lipshape/experiments.hpp>

using namespace lipshape;
namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& p)
{
    std::ifstream is(p, std::ios::binary);
    std::stringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

int cli(const std::string& args)
{
    const std::string cmd = std::string(LIPSHAPE_CLI_PATH) + " " + args + " > /dev/null 2>&1";
    return std::system(cmd.c_str());
}

fs::path fresh_dir(const std::string& name)
{
    const fs::path dir = fs::path(::testing::TempDir()) / name;
    fs::remove_all(dir);
    return dir;
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p)
{
    std::ifstream is(p);
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(is, line)) {
        std::vector<std::string> cells;
        std::stringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        rows.push_back(cells);
    }
    return rows;
}

}  // namespace

TEST(Experiments, ClosedFormValues)
{
    const double s = std::sqrt(std::numbers::pi) / 2.0;
    EXPECT_DOUBLE_EQ(builtin_experiment("disk").data.target(Vec2(0, 0)), 1.0);
    EXPECT_DOUBLE_EQ(builtin_experiment("disk").data.target(Vec2(0.6, 0.8)), 0.0);
    const auto sz = builtin_experiment("square-zero").data;
    for (double x2 : {-0.7, 0.0, 0.3}) {
        EXPECT_NEAR(sz.target(Vec2(s, x2)), 0.0, 1e-14);
        EXPECT_NEAR(sz.target(Vec2(-s, x2)), 0.0, 1e-14);
        EXPECT_NEAR(sz.target(Vec2(x2, s)), 0.0, 1e-14);
    }
    const auto ls = builtin_experiment("level-set-square").data;
    EXPECT_EQ(ls.source(Vec2(0.3, -2.0)), 0.0);
    EXPECT_DOUBLE_EQ(ls.target(Vec2(0.3, -0.2)), 2.0 * 0.3);
    const auto db = builtin_experiment("double-ball").data;
    EXPECT_DOUBLE_EQ(db.target(Vec2(1.0 / std::numbers::sqrt2, 0.0)), 0.125);
    EXPECT_DOUBLE_EQ(db.target(Vec2(-1.0 / std::numbers::sqrt2, 0.0)), 0.125);
    EXPECT_THROW(builtin_experiment("triangle"), std::invalid_argument);
}

TEST(Experiments, SourceIsMinusLaplacianOfTargetWhereStated)
{
    // disk: -Laplace z = 4 F; square-zero: -Laplace z = F
    const double h = 1e-4;
    auto laplace = [h](const ProblemData& d, const Vec2& x) {
        return (d.target(x + Vec2(h, 0)) + d.target(x - Vec2(h, 0)) + d.target(x + Vec2(0, h)) +
                d.target(x - Vec2(0, h)) - 4.0 * d.target(x)) /
               (h * h);
    };
    const auto disk = builtin_experiment("disk").data;
    const auto sz = builtin_experiment("square-zero").data;
    for (const Vec2& x : {Vec2(0.1, 0.2), Vec2(-0.5, 0.4), Vec2(0.7, -0.6)}) {
        EXPECT_NEAR(-laplace(disk, x), 4.0 * disk.source(x), 1e-5);
        EXPECT_NEAR(-laplace(sz, x), sz.source(x), 1e-4);
    }
}

TEST(Experiments, GradientsMatchFiniteDifferencesAwayFromKinks)
{
    std::mt19937 rng(1);
    std::uniform_real_distribution<double> u(-1.2, 1.2);
    const double h = 1e-6;
    for (const auto& name : experiment_names()) {
        const auto d = builtin_experiment(name).data;
        for (int k = 0; k < 200; ++k) {
            const Vec2 x(u(rng), u(rng));
            if (std::abs(x.x() + x.y()) < 1e-3 || std::abs(x.x() - x.y()) < 1e-3 || std::abs(x.x()) < 1e-3) continue;
            const Vec2 fd((d.target(x + Vec2(h, 0)) - d.target(x - Vec2(h, 0))) / (2 * h),
                          (d.target(x + Vec2(0, h)) - d.target(x - Vec2(0, h))) / (2 * h));
            EXPECT_NEAR((fd - d.target_gradient(x)).norm(), 0.0, 1e-6) << name;
        }
    }
}

TEST(Experiments, InitialShapes)
{
    const auto sq = initial_shape(builtin_experiment("disk"), 512);
    EXPECT_NEAR(volume(sq), std::numbers::pi, 2e-4);
    EXPECT_NEAR(sq[0], std::sqrt(std::numbers::pi) / 2.0, 1e-15);
    EXPECT_NEAR(sq[64], std::sqrt(std::numbers::pi / 2.0), 1e-14);  // corner at pi/4
    for (const char* name : {"level-set-square", "square-zero", "double-ball"}) {
        const auto f = initial_shape(builtin_experiment(name), 64);
        EXPECT_EQ(f.radii().min_value(), 1.0);
        EXPECT_EQ(f.radii().max_abs(), 1.0);
    }
}

TEST(Experiments, DeformedMeshExport)
{
    const auto mesh = generate_disk_mesh(16);
    auto points = [&](const RadialShape& f) {
        const fs::path p = fs::path(::testing::TempDir()) / "deformed.vtk";
        export_deformed_mesh(mesh, f, p.string());
        std::ifstream is(p);
        std::string line;
        std::getline(is, line);
        EXPECT_EQ(line, "# vtk DataFile Version 3.0");
        std::getline(is, line);
        EXPECT_NE(line.find("not the computational mesh"), std::string::npos);
        while (std::getline(is, line) && line.rfind("POINTS", 0) != 0) {
        }
        std::vector<Vec2> pts;
        for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
            double x, y, z;
            is >> x >> y >> z;
            pts.emplace_back(x, y);
        }
        std::string cells;
        std::size_t nc = 0, total = 0;
        is >> cells >> nc >> total;
        EXPECT_EQ(cells, "CELLS");
        EXPECT_EQ(nc, mesh.n_triangles());
        EXPECT_EQ(total, 4 * mesh.n_triangles());
        return pts;
    };
    const auto id = points(RadialShape::constant(64, 1.0));
    const auto twice = points(RadialShape::constant(64, 2.0));
    for (std::size_t v = 0; v < mesh.n_vertices(); ++v) {
        EXPECT_NEAR((id[v] - mesh.vertices()[v]).norm(), 0.0, 1e-15);
        EXPECT_NEAR((twice[v] - 2.0 * mesh.vertices()[v]).norm(), 0.0, 1e-15);
    }
    // with N a multiple of the 96 boundary vertices each boundary vertex sits on a node
    const auto sq = points(RadialShape::sample(384, square_radial_function));
    for (int b : mesh.boundary_loop())
        EXPECT_NEAR(std::max(std::abs(sq[b].x()), std::abs(sq[b].y())), std::sqrt(std::numbers::pi) / 2.0, 1e-9);
}

TEST(Cli, SingleIterationWritesTwoSnapshots)
{
    const auto dir = fresh_dir("cli_one");
    ASSERT_EQ(cli("run --experiment disk --method formula --form volume --n 64 --mesh-level 6 --max-it 1 --out " +
                  dir.string()),
              0);
    int shapes = 0, meshes = 0;
    for (const auto& e : fs::directory_iterator(dir)) {
        const auto name = e.path().filename().string();
        if (name.rfind("shape_", 0) == 0) ++shapes;
        if (name.rfind("deformed_", 0) == 0) ++meshes;
    }
    EXPECT_EQ(shapes, 2);
    EXPECT_EQ(meshes, 2);
    EXPECT_TRUE(fs::exists(dir / "shape_0000.csv"));
    EXPECT_TRUE(fs::exists(dir / "shape_0001.csv"));
    const auto rows = read_csv(dir / "energy.csv");
    ASSERT_EQ(rows.size(), 3u);  // header, initial energy, one iteration
    EXPECT_EQ(rows[2][0], "1");

    const auto summary = slurp(dir / "summary.json");
    for (const char* key : {"\"experiment\"", "\"method\"", "\"form\"", "\"iterations\"", "\"final_energy\"",
                            "\"termination\""})
        EXPECT_NE(summary.find(key), std::string::npos) << key;
    EXPECT_NE(summary.find("\"iterations\": 1"), std::string::npos);
}

TEST(Cli, SinkhornRunHasMonotoneEnergy)
{
    const auto dir = fresh_dir("cli_sinkhorn");
    ASSERT_EQ(cli("run --experiment disk --method sinkhorn --form volume --n 128 --mesh-level 16 --max-it 15 --out " +
                  dir.string()),
              0);
    const auto rows = read_csv(dir / "energy.csv");
    ASSERT_GE(rows.size(), 3u);
    for (std::size_t r = 2; r < rows.size(); ++r) {
        const double prev = std::stod(rows[r - 1][1]), cur = std::stod(rows[r][1]);
        if (rows[r][3] == "rejected") EXPECT_EQ(cur, prev);
        else EXPECT_LT(cur, prev);
    }
}

TEST(Cli, RepeatedRunsAreByteIdentical)
{
    const auto a = fresh_dir("cli_a"), b = fresh_dir("cli_b");
    const std::string args = "run --experiment square-zero --method h1 --form boundary --n 64 --mesh-level 6 "
                             "--max-it 4 --snapshot-every 2 --out ";
    ASSERT_EQ(cli(args + a.string()), 0);
    ASSERT_EQ(cli(args + b.string()), 0);
    int compared = 0;
    for (const auto& e : fs::directory_iterator(a)) {
        const auto name = e.path().filename();
        ASSERT_TRUE(fs::exists(b / name)) << name;
        EXPECT_EQ(slurp(e.path()), slurp(b / name)) << name;
        ++compared;
    }
    EXPECT_GE(compared, 6);
}

TEST(Cli, BadFlagsFail)
{
    EXPECT_NE(cli("run --experiment nowhere"), 0);
    EXPECT_NE(cli("run --method newton"), 0);
    EXPECT_NE(cli("run --n 3"), 0);
    EXPECT_NE(cli("--bogus"), 0);
    EXPECT_NE(cli(""), 0);
}

TEST(Cli, CheckDerivativePrintsTable)
{
    const fs::path out = fs::path(::testing::TempDir()) / "check.txt";
    const std::string cmd = std::string(LIPSHAPE_CLI_PATH) +
                            " check-derivative --experiment disk --n 64 --mesh-level 6 --form volume > " +
                            out.string();
    ASSERT_EQ(std::system(cmd.c_str()), 0);
    const auto text = slurp(out);
    EXPECT_NE(text.find("pairing"), std::string::npos);
    EXPECT_NE(text.find("t,central_difference,relative_error"), std::string::npos);
}
