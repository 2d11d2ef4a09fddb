#include "stabfem.h"

#include <cstdlib>
#include <cstring>
#include <new>

#include "stabfem/driver.hpp"

struct stabfem_mesh {
  stabfem::Mesh mesh;
};

namespace {

thread_local std::string g_last_error;

char* dup_string(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (out) std::memcpy(out, s.c_str(), s.size() + 1);
  return out;
}

template <class Fn>
stabfem_status guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const stabfem::ConfigError& e) {
    g_last_error = e.what();
    return STABFEM_BAD_CONFIG;
  } catch (const std::invalid_argument& e) {
    g_last_error = e.what();
    return STABFEM_BAD_CONFIG;
  } catch (const stabfem::SolverFailure& e) {
    g_last_error = e.what();
    return STABFEM_SOLVER_ERROR;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return STABFEM_INTERNAL_ERROR;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return STABFEM_INTERNAL_ERROR;
  }
}

}  // namespace

extern "C" {

stabfem_status stabfem_mesh_unit_square(int n, int with_macro, stabfem_mesh** out) {
  if (!out) {
    g_last_error = "null output pointer";
    return STABFEM_BAD_CONFIG;
  }
  *out = nullptr;
  return guarded([&] {
    *out = new stabfem_mesh{stabfem::build_unit_square_mesh(n, with_macro != 0)};
    return STABFEM_OK;
  });
}

stabfem_status stabfem_mesh_parse(const char* text, stabfem_mesh** out) {
  if (!text || !out) {
    g_last_error = "null argument";
    return STABFEM_BAD_CONFIG;
  }
  *out = nullptr;
  return guarded([&] {
    *out = new stabfem_mesh{stabfem::parse_mesh_string(text)};
    return STABFEM_OK;
  });
}

stabfem_status stabfem_mesh_serialize(const stabfem_mesh* mesh, char** out) {
  if (!mesh || !out) {
    g_last_error = "null argument";
    return STABFEM_BAD_CONFIG;
  }
  *out = nullptr;
  return guarded([&] {
    *out = dup_string(stabfem::serialize_mesh(mesh->mesh));
    return *out ? STABFEM_OK : STABFEM_INTERNAL_ERROR;
  });
}

stabfem_status stabfem_mesh_refine(const stabfem_mesh* mesh, stabfem_mesh** out) {
  if (!mesh || !out) {
    g_last_error = "null argument";
    return STABFEM_BAD_CONFIG;
  }
  *out = nullptr;
  return guarded([&] {
    *out = new stabfem_mesh{stabfem::refine_uniform(mesh->mesh)};
    return STABFEM_OK;
  });
}

stabfem_status stabfem_mesh_info(const stabfem_mesh* mesh, int* num_vertices, int* num_cells,
                                 int* num_boundary_edges, int* num_patches) {
  if (!mesh) {
    g_last_error = "null mesh";
    return STABFEM_BAD_CONFIG;
  }
  if (num_vertices) *num_vertices = mesh->mesh.num_vertices();
  if (num_cells) *num_cells = mesh->mesh.num_cells();
  if (num_boundary_edges) *num_boundary_edges = static_cast<int>(mesh->mesh.boundary_edges.size());
  if (num_patches) *num_patches = mesh->mesh.num_patches;
  return STABFEM_OK;
}

void stabfem_mesh_free(stabfem_mesh* mesh) { delete mesh; }

stabfem_status stabfem_run(const char* subcommand, const char* config_json, char** report_out) {
  if (!subcommand || !config_json || !report_out) {
    g_last_error = "null argument";
    return STABFEM_BAD_CONFIG;
  }
  *report_out = nullptr;
  return guarded([&] {
    stabfem::RunResult rr = stabfem::run_command(subcommand, config_json);
    *report_out = dup_string(rr.output);
    if (!*report_out) return STABFEM_INTERNAL_ERROR;
    return rr.status == 0 ? STABFEM_OK : STABFEM_VERDICT_FAIL;
  });
}

void stabfem_string_free(char* s) { std::free(s); }

const char* stabfem_last_error(void) { return g_last_error.c_str(); }

}  // extern "C"
