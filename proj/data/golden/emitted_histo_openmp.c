/* histo: MDH kernel for OpenMP */
#include <stdlib.h>
#include <limits.h>
#include <math.h>
#ifdef _OPENMP
#include <omp.h>
#endif

/* 0.1 scalar function */
static inline long long mdh_cmp_i64(long long a, long long b) { return (a > b) - (a < b); }
static inline void mdh_f(const long long in_data_0, const long long d_i, const long long d_j, long long* out_hist_0) {
  *out_hist_0 = ((mdh_cmp_i64(in_data_0, d_j)) != 0LL ? 0LL : 1LL);
}

/* combine: i=pw:+ j=cc */

/* 0.2 input index maps */
#define IDX_data_0(d_i, d_j) (((d_i)))
/* 0.3 output index maps */
#define IDX_hist_0(d_i, d_j) (((d_j)))

void mdh_kernel(const long long* data, long long* hist) {
  /* 0.4 buffers */
  long long* part_hist = (long long*)calloc(8, sizeof(long long)); /* per-part partial accumulators */
#ifdef _OPENMP
  omp_set_max_active_levels(1);
#endif
  /* 0.5 access aliases */
#define IN_data_0(d_i, d_j) data[IDX_data_0(d_i, d_j)]
#define ACC_hist_0(d_i, d_j) hist[IDX_hist_0(d_i, d_j)]

  /* de phase: staging copies */
  for (long long t = 0; t < 4; ++t) hist[t] = 0LL;

  /* fused de / scalar / re nest */
  /* level (1,x) tag (MM,x) */
  const long long p_1_i = 0;
  /* level (1,y) tag (MM,y) */
  const long long p_1_j = 0;
  /* level (2,x) tag (L2,x) */
  for (long long p_2_i = 0; p_2_i < 2; ++p_2_i) {
    /* level (2,y) tag (L2,y) */
    const long long p_2_j = 0;
    /* level (3,x) tag (L1,x) */
    for (long long p_3_i = 0; p_3_i < 4; ++p_3_i) {
      /* level (3,y) tag (L1,y) */
      for (long long p_3_j = 0; p_3_j < 2; ++p_3_j) {
        /* level (4,x) tag (COR,x) */
        #pragma omp parallel for schedule(static)
        for (long long p_4_i = 0; p_4_i < 2; ++p_4_i) {
          for (long long t = 0; t < 4; ++t) part_hist[p_4_i * 4 + t] = 0LL;
          /* level (4,y) tag (COR,y) */
          for (long long p_4_j = 0; p_4_j < 2; ++p_4_j) {
            const long long d_i = p_1_i * 16 + p_2_i * 8 + p_3_i * 2 + p_4_i;
            const long long d_j = p_1_j * 4 + p_2_j * 4 + p_3_j * 2 + p_4_j;
            long long r_hist_0;
            mdh_f(IN_data_0(d_i, d_j), d_i, d_j, &r_hist_0);
            part_hist[p_4_i * 4 + IDX_hist_0(d_i, d_j)] = (part_hist[p_4_i * 4 + IDX_hist_0(d_i, d_j)] + r_hist_0);
          }
        }
        for (long long pm = 0; pm < 2; ++pm) {
          for (long long t = 0; t < 4; ++t) {
            hist[t] = (hist[t] + part_hist[pm * 4 + t]);
          }
        }
      }
    }
  }

  free(part_hist);
}
