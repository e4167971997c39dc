#ifndef PLATOON_PLATOON_H
#define PLATOON_PLATOON_H

#include <stddef.h>
#include <stdint.h>

#if defined(PLATOON_BUILDING_LIBRARY)
#define PLATOON_API __attribute__((visibility("default")))
#else
#define PLATOON_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes double as process exit codes for the CLI. */
typedef enum platoon_status {
  PLATOON_OK = 0,
  PLATOON_ERR_INFEASIBLE = 1, /* deadline cannot be met, solver failure */
  PLATOON_ERR_INPUT = 2,      /* malformed files, bad config, bad arguments */
  PLATOON_ERR_INTERNAL = 3
} platoon_status;

typedef enum platoon_selection { PLATOON_SELECT_GREEDY = 0, PLATOON_SELECT_RANDOM = 1 } platoon_selection;

typedef struct platoon_config platoon_config;
typedef struct platoon_network platoon_network;
typedef struct platoon_assignments platoon_assignments;
typedef struct platoon_run platoon_run;
typedef struct platoon_graph platoon_graph;

PLATOON_API const char* platoon_version(void);

/* Message of the last failed call on this thread ("" if none). */
PLATOON_API const char* platoon_last_error(void);

/* Strings returned through char** out-parameters are owned by the caller. */
PLATOON_API void platoon_string_free(char* s);

/* One JSON object per call. The handler may be invoked from worker threads,
 * never concurrently. Pass NULL to disable logging. */
typedef void (*platoon_log_fn)(const char* json_line, void* user);
PLATOON_API void platoon_set_log_handler(platoon_log_fn fn, void* user);

/* Config. */
PLATOON_API platoon_status platoon_config_default(platoon_config** out);
PLATOON_API platoon_status platoon_config_load(const char* path, platoon_config** out);
PLATOON_API platoon_status platoon_config_parse(const char* json_text, platoon_config** out);
/* Dotted key ("solver.tol"); value parsed as JSON, else taken as a string. */
PLATOON_API platoon_status platoon_config_set(platoon_config* cfg, const char* key, const char* value);
/* Applies PLATOON_* variables from the process environment. */
PLATOON_API platoon_status platoon_config_apply_env(platoon_config* cfg);
PLATOON_API platoon_status platoon_config_to_json(const platoon_config* cfg, char** out);
PLATOON_API void platoon_config_free(platoon_config* cfg);

/* Road networks. */
PLATOON_API platoon_status platoon_network_load(const char* path, platoon_network** out);
PLATOON_API platoon_status platoon_network_grid(size_t rows, size_t cols, double edge_length_m,
                                                platoon_network** out);
PLATOON_API platoon_status platoon_network_save(const platoon_network* net, const char* path);
PLATOON_API size_t platoon_network_node_count(const platoon_network* net);
PLATOON_API size_t platoon_network_edge_count(const platoon_network* net);
PLATOON_API void platoon_network_free(platoon_network* net);

/* Assignments (bound to the network they were loaded against). */
PLATOON_API platoon_status platoon_assignments_load(const platoon_network* net, const char* path,
                                                    platoon_assignments** out);
PLATOON_API platoon_status platoon_assignments_save(const platoon_assignments* a, const char* path);
PLATOON_API size_t platoon_assignments_count(const platoon_assignments* a);
PLATOON_API void platoon_assignments_free(platoon_assignments* a);

/* Network from the config's scenario block plus generated assignments. */
PLATOON_API platoon_status platoon_generate(const platoon_config* cfg, platoon_network** net_out,
                                            platoon_assignments** assignments_out);

/* Full pipeline. `assignments` must have been loaded against `net`. */
PLATOON_API platoon_status platoon_run_pipeline(const platoon_config* cfg, const platoon_network* net,
                                                const platoon_assignments* assignments, platoon_run** out);
PLATOON_API platoon_status platoon_run_write(const platoon_run* run, const char* dir);
PLATOON_API platoon_status platoon_run_report_json(const platoon_run* run, char** out);
/* Names: fuel_default_kg, fuel_stage3_kg, fuel_stage4_kg, fuel_spontaneous_kg,
 * upper_bound_kg, objective_kg, saving_stage3, saving_stage4,
 * saving_spontaneous, upper_bound_rel, assignments, followers, leaders,
 * graph_edges, plans_invalid, intervals_bad. */
PLATOON_API platoon_status platoon_run_metric(const platoon_run* run, const char* name, double* out);
PLATOON_API platoon_status platoon_run_graph(const platoon_run* run, platoon_graph** out);
PLATOON_API void platoon_run_free(platoon_run* run);

/* Monte Carlo sweep; writes runs.csv and summary.csv into out_dir. */
PLATOON_API platoon_status platoon_montecarlo(const platoon_config* cfg, const size_t* sizes, size_t n_sizes,
                                              size_t runs, const char* out_dir);

/* Coordination graphs (CSV src,dst,saving_kg). */
PLATOON_API platoon_status platoon_graph_load_csv(const char* path, platoon_graph** out);
PLATOON_API platoon_status platoon_graph_save_csv(const platoon_graph* g, const char* path);
PLATOON_API size_t platoon_graph_node_count(const platoon_graph* g);
PLATOON_API size_t platoon_graph_edge_count(const platoon_graph* g);
/* Leader sets come back as JSON {leaders, follower_of, objective_kg}. */
PLATOON_API platoon_status platoon_graph_cluster(const platoon_graph* g, platoon_selection rule, uint64_t seed,
                                                 char** out);
PLATOON_API platoon_status platoon_graph_exact(const platoon_graph* g, size_t limit, char** out);
PLATOON_API platoon_status platoon_graph_upper_bound(const platoon_graph* g, double* out);
PLATOON_API void platoon_graph_free(platoon_graph* g);

#ifdef __cplusplus
}
#endif

#endif
