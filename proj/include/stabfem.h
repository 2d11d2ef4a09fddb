/* C interface to the stabilized finite element library. All functions
 * return a status code; outputs are passed through opaque handles and
 * library-owned strings that the caller releases. Thread-compatible:
 * the error message buffer is thread-local. */
#ifndef STABFEM_H
#define STABFEM_H

#ifdef __cplusplus
extern "C" {
#endif

typedef enum stabfem_status {
  STABFEM_OK = 0,
  STABFEM_VERDICT_FAIL = 1, /* run completed, numerical verdict negative */
  STABFEM_BAD_CONFIG = 2,   /* invalid configuration or input format */
  STABFEM_SOLVER_ERROR = 3, /* factorization or iteration failure */
  STABFEM_INTERNAL_ERROR = 4
} stabfem_status;

typedef struct stabfem_mesh stabfem_mesh;

/* Structured triangulation of the unit square; with_macro != 0 builds it
 * as one refinement of the n/2 coarse mesh (n must then be even). */
stabfem_status stabfem_mesh_unit_square(int n, int with_macro, stabfem_mesh** out);

/* Parses the line-oriented ASCII format. */
stabfem_status stabfem_mesh_parse(const char* text, stabfem_mesh** out);

/* Serializes to the same ASCII format; free with stabfem_string_free. */
stabfem_status stabfem_mesh_serialize(const stabfem_mesh* mesh, char** out);

/* Splits every cell into four; the result records the input cells as
 * macro patches. */
stabfem_status stabfem_mesh_refine(const stabfem_mesh* mesh, stabfem_mesh** out);

stabfem_status stabfem_mesh_info(const stabfem_mesh* mesh, int* num_vertices, int* num_cells,
                                 int* num_boundary_edges, int* num_patches);

void stabfem_mesh_free(stabfem_mesh* mesh);

/* Runs one subcommand ("solve", "infsup", "coercivity", "signcheck",
 * "convergence", "check") on a JSON configuration string. *report_out
 * receives the JSON or CSV report (also on STABFEM_VERDICT_FAIL); free
 * it with stabfem_string_free. */
stabfem_status stabfem_run(const char* subcommand, const char* config_json, char** report_out);

void stabfem_string_free(char* s);

/* Message for the most recent failure on this thread; owned by the
 * library, valid until the next call. */
const char* stabfem_last_error(void);

#ifdef __cplusplus
}
#endif

#endif /* STABFEM_H */
