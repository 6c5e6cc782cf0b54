#include <filesystem>
#include <fstream>

#include <gtest/gtest.h>

#include "lqg/grid.hpp"

using namespace lqg;

TEST(Grid, Geometry) {
    const Grid g(64);
    EXPECT_DOUBLE_EQ(g.spacing, 1.0 / 64);
    EXPECT_EQ(g.size(), 4096u);
    EXPECT_DOUBLE_EQ(g.center(0, 0).x, 0.5 / 64);
    EXPECT_EQ(g.cell_of({0.5, 0.999}), (std::pair<int, int>{32, 63}));
    EXPECT_EQ(g.cell_of({-1.0, 2.0}), (std::pair<int, int>{0, 63}));
    EXPECT_NEAR(boundary_distance({0.2, 0.9}), 0.1, 1e-15);
    EXPECT_THROW(Grid(48), std::invalid_argument);
    EXPECT_THROW(Grid(8), std::invalid_argument);
}

TEST(Grid, ReflectedExtension) {
    GridField d(Grid(16)), f(Grid(16, BoundaryCondition::free));
    for (int j = 0; j < 16; ++j)
        for (int i = 0; i < 16; ++i) d.at(i, j) = f.at(i, j) = 1.0 + i + 100.0 * j;
    EXPECT_EQ(d.extended(-1, 3), -d.at(0, 3));
    EXPECT_EQ(d.extended(16, 3), -d.at(15, 3));
    EXPECT_EQ(d.extended(-1, -1), d.at(0, 0));
    EXPECT_EQ(f.extended(-2, 17), f.at(1, 14));
    // Dirichlet interpolation vanishes on the boundary faces.
    EXPECT_NEAR(d.interpolate({0.0, 0.37}), 0.0, 1e-12);
    EXPECT_NEAR(d.interpolate({0.61, 1.0}), 0.0, 1e-12);
    // Bilinear interpolation reproduces affine data in the interior.
    EXPECT_NEAR(d.interpolate({0.5, 0.5}), 1.0 + (0.5 * 16 - 0.5) + 100.0 * (0.5 * 16 - 0.5), 1e-12);
}

TEST(FieldIo, RoundTrip) {
    const auto dir = std::filesystem::temp_directory_path() / "lqg_grid_test";
    std::filesystem::create_directories(dir);
    GridField f(Grid(32, BoundaryCondition::free), 0xDEADBEEFCAFEull);
    for (std::size_t k = 0; k < f.values.size(); ++k) f.values[k] = std::sin(0.1 * k) * 1e3;
    const auto path = (dir / "f.lqgf").string();
    io::write_field(path, f);
    EXPECT_EQ(std::filesystem::file_size(path), 24u + 32u * 32u * 8u);
    const auto g = io::read_field(path);
    EXPECT_EQ(g.grid, f.grid);
    EXPECT_EQ(g.seed, f.seed);
    EXPECT_EQ(g.values, f.values);

    std::ifstream in(path, std::ios::binary);
    char magic[4];
    in.read(magic, 4);
    EXPECT_EQ(std::string(magic, 4), "LQGF");
}

TEST(FieldIo, RejectsBadFiles) {
    const auto dir = std::filesystem::temp_directory_path() / "lqg_grid_test";
    std::filesystem::create_directories(dir);
    const auto bad = (dir / "bad.lqgf").string();
    std::ofstream(bad) << "NOPE0000000000000000";
    EXPECT_THROW(io::read_field(bad), std::runtime_error);
    GridField f(Grid(16));
    const auto path = (dir / "trunc.lqgf").string();
    io::write_field(path, f);
    std::filesystem::resize_file(path, 100);
    EXPECT_THROW(io::read_field(path), std::runtime_error);
    EXPECT_THROW(io::read_field((dir / "missing.lqgf").string()), std::runtime_error);
}
