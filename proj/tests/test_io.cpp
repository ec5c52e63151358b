#include <filesystem>

#include "doctest.h"
#include "spatboost/io.hpp"

using namespace spatboost;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() /
           ("spatboost_test_" + std::to_string(::getpid()));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const {
    return (path / name).string();
  }
};

}  // namespace

TEST_CASE("data CSV round-trips") {
  TempDir tmp;
  DataTable table;
  table.names = {"y", "X1", "X2"};
  table.values.resize(3, 3);
  table.values << 1.5, -2.0, 0.125, 4.0, 5.5, -6.25, 0.1, 0.2, 0.3;
  write_data_csv(tmp.file("d.csv"), table);
  const DataTable back = read_data_csv(tmp.file("d.csv"));
  CHECK(back.names == table.names);
  CHECK((back.values - table.values).cwiseAbs().maxCoeff() == 0.0);
  CHECK(back.column_index("X2") == 2);
  CHECK(back.column_index("nope") == -1);
}

TEST_CASE("data CSV rejects non-numeric and ragged rows") {
  TempDir tmp;
  write_file(tmp.file("bad.csv"), "a,b\n1,NA\n");
  CHECK_THROWS_AS(read_data_csv(tmp.file("bad.csv")), ValidationError);
  write_file(tmp.file("ragged.csv"), "a,b\n1,2\n3\n");
  CHECK_THROWS_AS(read_data_csv(tmp.file("ragged.csv")), ValidationError);
  write_file(tmp.file("empty.csv"), "a,b\n");
  CHECK_THROWS_AS(read_data_csv(tmp.file("empty.csv")), ValidationError);
}

TEST_CASE("weight CSV round-trips") {
  TempDir tmp;
  const WeightMatrix w = row_normalize(build_circular(6, 2));
  write_weight_csv(tmp.file("w.csv"), w);
  const WeightMatrix back = read_weight_csv(tmp.file("w.csv"), true);
  CHECK(back.size() == 6);
  CHECK(back.nonzeros() == w.nonzeros());
  const Eigen::MatrixXd diff =
      Eigen::MatrixXd(w.matrix()) - Eigen::MatrixXd(back.matrix());
  CHECK(diff.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("weight CSV requires the triplet header") {
  TempDir tmp;
  write_file(tmp.file("w.csv"), "row,col,weight\n0,1,1\n");
  CHECK_THROWS_AS(read_weight_csv(tmp.file("w.csv"), false), ValidationError);
}

TEST_CASE("coordinates CSV reads id,x,y") {
  TempDir tmp;
  write_file(tmp.file("c.csv"), "id,x,y\n0,0.0,1.0\n1,2.5,-3.5\n");
  const Coordinates c = read_coords_csv(tmp.file("c.csv"));
  REQUIRE(c.size() == 2);
  CHECK(c.x[1] == 2.5);
  CHECK(c.y[1] == -3.5);
  write_file(tmp.file("bad.csv"), "x,y\n0,1\n");
  CHECK_THROWS_AS(read_coords_csv(tmp.file("bad.csv")), ValidationError);
}

TEST_CASE("file digests are stable and content-sensitive") {
  TempDir tmp;
  write_file(tmp.file("a.txt"), "hello");
  write_file(tmp.file("b.txt"), "hello");
  write_file(tmp.file("c.txt"), "hello!");
  CHECK(file_digest(tmp.file("a.txt")) == file_digest(tmp.file("b.txt")));
  CHECK(file_digest(tmp.file("a.txt")) != file_digest(tmp.file("c.txt")));
  CHECK(file_digest(tmp.file("a.txt")).rfind("fnv1a:", 0) == 0);
}

TEST_CASE("missing files are reported") {
  CHECK_THROWS_AS(read_file("/nonexistent/path.csv"), ValidationError);
  CHECK_THROWS_AS(read_data_csv("/nonexistent/path.csv"), ValidationError);
}
