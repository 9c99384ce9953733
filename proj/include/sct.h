#ifndef SCT_H
#define SCT_H

/* C interface to the scheduling and authentication toolkit.
 *
 * Functions return an sct_status; on failure sct_last_error() holds a
 * message for the calling thread. Strings handed out through char** are
 * owned by the caller and released with sct_string_free. Reports are JSON
 * documents carrying "schema_version". */

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#  define SCT_API __declspec(dllexport)
#else
#  define SCT_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sct_status {
  SCT_OK = 0,
  SCT_ERR_INVALID_ARGUMENT = 1,
  SCT_ERR_UNSET_PARAMETER = 2,
  SCT_ERR_PARSE = 3,
  SCT_ERR_SCHEMA = 4,
  SCT_ERR_IO = 5,
  SCT_ERR_INFEASIBLE_INPUT = 6,
  SCT_ERR_INTERNAL = 99
} sct_status;

typedef struct sct_system sct_system;

SCT_API const char* sct_version(void);
SCT_API const char* sct_last_error(void);
SCT_API const char* sct_status_name(sct_status s);
SCT_API void sct_string_free(char* s);

/* systems */
SCT_API sct_status sct_system_parse(const char* json, sct_system** out);
SCT_API sct_status sct_system_load(const char* path, sct_system** out);
SCT_API void sct_system_free(sct_system* sys);
SCT_API sct_status sct_system_to_json(const sct_system* sys, char** json);
SCT_API int64_t sct_system_ticks_per_unit(const sct_system* sys);
SCT_API size_t sct_system_transaction_count(const sct_system* sys);

/* Structural checks; *ok is 1 when there are no violations. The report
 * lists them. */
SCT_API sct_status sct_validate(const sct_system* sys, int* ok, char** report);

/* Demand verdicts for every ECU and the bus (parameters must be set). */
SCT_API sct_status sct_analyze(const sct_system* sys, int* schedulable, char** report);

/* Two-stage synthesis. strategy is "network-first" or "ecu-first";
 * max_seconds <= 0 means no time limit. *feasible is 1 for FEASIBLE; the
 * solved system (parameters written back) is returned only then and may be
 * requested as NULL. */
SCT_API sct_status sct_synthesize(const sct_system* sys, const char* strategy, double max_seconds,
                                  int* feasible, char** solution, sct_system** solved);

/* Whole-system MILP in LP file format. */
SCT_API sct_status sct_export_lp(const sct_system* sys, char** lp);

/* EDF simulation of all resources plus transaction timing checks.
 * horizon <= 0 simulates up to the largest feasibility bound over the
 * resources. trace_csv may be NULL; otherwise it receives one CSV with a
 * leading resource column. *misses counts deadline misses and timing
 * violations. */
SCT_API sct_status sct_simulate(const sct_system* sys, int64_t horizon, size_t* misses, char** report,
                                char** trace_csv);

/* Opportunistic authentication on a parameterized system. config is an
 * opportunistic run document, curves a curve document or NULL (rewards
 * then grow linearly with the gained distance). *valid is 1 when the
 * periodic schedule is unchanged. */
SCT_API sct_status sct_opportunistic(const sct_system* sys, const char* config, const char* curves,
                                     int* valid, char** report);

typedef struct sct_gen_spec {
  int n_transactions;
  int ecu_count;
  double ecu_utilization;
  double bus_utilization;
  int64_t ticks_per_ms;
  uint64_t seed;
} sct_gen_spec;

/* Defaults matching the library generator. */
SCT_API sct_gen_spec sct_gen_spec_default(void);
SCT_API sct_status sct_generate(const sct_gen_spec* spec, sct_system** out);
/* Case-study-shaped system: three control transactions at 20 ms with
 * background load on eight ECUs and a 1 Mbps bus. */
SCT_API sct_status sct_case_study(int64_t ticks_per_ms, uint64_t seed, sct_system** out);

/* Empirical QoC bound for every plant in a plant document (or only
 * plant_id when not NULL), for policies l' in [f, l_max] per l. */
SCT_API sct_status sct_qoc_estimate(const char* plants, const char* plant_id, int l_max, int f, int samples,
                                    int horizon, uint64_t seed, char** report);

/* One closed-loop run as CSV. l == 0 means no authentication; strategy is
 * "none", "greedy" or "random". */
SCT_API sct_status sct_qoc_trajectory(const char* plants, const char* plant_id, int l, int f, int s,
                                      const char* strategy, int horizon, uint64_t seed, char** csv);

#ifdef __cplusplus
}
#endif

#endif
