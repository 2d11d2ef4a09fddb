#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstring>
#include <string>

#include "stabfem.h"

TEST_CASE("mesh lifecycle through the C interface") {
  stabfem_mesh* mesh = nullptr;
  REQUIRE(stabfem_mesh_unit_square(4, 0, &mesh) == STABFEM_OK);
  int nv = 0, nc = 0, nb = 0, np = 0;
  CHECK(stabfem_mesh_info(mesh, &nv, &nc, &nb, &np) == STABFEM_OK);
  CHECK(nv == 25);
  CHECK(nc == 32);
  CHECK(nb == 16);
  CHECK(np == 0);

  stabfem_mesh* fine = nullptr;
  REQUIRE(stabfem_mesh_refine(mesh, &fine) == STABFEM_OK);
  CHECK(stabfem_mesh_info(fine, &nv, &nc, nullptr, &np) == STABFEM_OK);
  CHECK(nc == 128);
  CHECK(np == 32);

  char* text = nullptr;
  REQUIRE(stabfem_mesh_serialize(mesh, &text) == STABFEM_OK);
  stabfem_mesh* parsed = nullptr;
  REQUIRE(stabfem_mesh_parse(text, &parsed) == STABFEM_OK);
  char* text2 = nullptr;
  REQUIRE(stabfem_mesh_serialize(parsed, &text2) == STABFEM_OK);
  CHECK(std::strcmp(text, text2) == 0);
  stabfem_string_free(text);
  stabfem_string_free(text2);
  stabfem_mesh_free(parsed);
  stabfem_mesh_free(fine);
  stabfem_mesh_free(mesh);
}

TEST_CASE("error paths set status and message") {
  stabfem_mesh* mesh = nullptr;
  CHECK(stabfem_mesh_unit_square(0, 0, &mesh) == STABFEM_BAD_CONFIG);
  CHECK(mesh == nullptr);
  CHECK(std::string(stabfem_last_error()).find("n") != std::string::npos);

  CHECK(stabfem_mesh_unit_square(3, 1, &mesh) == STABFEM_BAD_CONFIG);
  CHECK(stabfem_mesh_parse("garbage", &mesh) != STABFEM_OK);
  CHECK(stabfem_mesh_parse(nullptr, &mesh) == STABFEM_BAD_CONFIG);
  CHECK(stabfem_mesh_serialize(nullptr, nullptr) == STABFEM_BAD_CONFIG);

  char* report = nullptr;
  CHECK(stabfem_run("solve", R"({"mu": -2})", &report) == STABFEM_BAD_CONFIG);
  CHECK(report == nullptr);
  CHECK(std::string(stabfem_last_error()).find("mu") != std::string::npos);
  CHECK(stabfem_run("bogus", "{}", &report) == STABFEM_BAD_CONFIG);
  CHECK(stabfem_run(nullptr, "{}", &report) == STABFEM_BAD_CONFIG);
}

TEST_CASE("run returns reports and verdict codes") {
  char* report = nullptr;
  REQUIRE(stabfem_run("infsup", R"({"n": 4, "k": 1, "stab": "bp", "no_timestamp": true})",
                      &report) == STABFEM_OK);
  REQUIRE(report != nullptr);
  CHECK(std::string(report).find("\"gamma_stab\"") != std::string::npos);
  stabfem_string_free(report);

  report = nullptr;
  CHECK(stabfem_run("infsup", R"({"n": 4, "k": 1, "stab": "none", "no_timestamp": true})",
                    &report) == STABFEM_VERDICT_FAIL);
  REQUIRE(report != nullptr);  // report still produced on verdict failure
  CHECK(std::string(report).find("\"verdict\": false") != std::string::npos);
  stabfem_string_free(report);
}
