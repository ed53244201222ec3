/* matvec: MDH kernel for OpenMP */
#include <stdlib.h>
#include <limits.h>
#include <math.h>
#ifdef _OPENMP
#include <omp.h>
#endif

/* 0.1 scalar function */
static inline void mdh_f(const long long in_M_0, const long long in_v_0, const long long d_i, const long long d_j, long long* out_w_0) {
  *out_w_0 = (in_M_0 * in_v_0);
}

/* combine: i=cc j=pw:+ */

/* 0.2 input index maps */
#define IDX_M_0(d_i, d_j) (((d_i)) * 16 + ((d_j)))
#define IDX_v_0(d_i, d_j) (((d_j)))
/* 0.3 output index maps */
#define IDX_w_0(d_i, d_j) (((d_i)))

void mdh_kernel(const long long* M, const long long* v, long long* w) {
  /* 0.4 buffers */
#ifdef _OPENMP
  omp_set_max_active_levels(1);
#endif
  /* 0.5 access aliases */
#define IN_M_0(d_i, d_j) M[IDX_M_0(d_i, d_j)]
#define IN_v_0(d_i, d_j) v[IDX_v_0(d_i, d_j)]
#define ACC_w_0(d_i, d_j) w[IDX_w_0(d_i, d_j)]

  /* de phase: staging copies */

  /* fused de / scalar / re nest */
  /* level (1,x) tag (MM,x) */
  const long long p_1_i = 0;
  /* level (1,y) tag (MM,y) */
  const long long p_1_j = 0;
  /* level (2,x) tag (L2,x) */
  for (long long p_2_i = 0; p_2_i < 2; ++p_2_i) {
    /* level (2,y) tag (L2,y) */
    for (long long p_2_j = 0; p_2_j < 2; ++p_2_j) {
      /* level (3,x) tag (L1,x) */
      for (long long p_3_i = 0; p_3_i < 2; ++p_3_i) {
        /* level (3,y) tag (L1,y) */
        for (long long p_3_j = 0; p_3_j < 4; ++p_3_j) {
          /* level (4,x) tag (COR,x) */
          #pragma omp parallel for schedule(static)
          for (long long p_4_i = 0; p_4_i < 2; ++p_4_i) {
            /* level (4,y) tag (COR,y) */
            for (long long p_4_j = 0; p_4_j < 2; ++p_4_j) {
              const long long d_i = p_1_i * 8 + p_2_i * 4 + p_3_i * 2 + p_4_i;
              const long long d_j = p_1_j * 16 + p_2_j * 8 + p_3_j * 2 + p_4_j;
              long long r_w_0;
              mdh_f(IN_M_0(d_i, d_j), IN_v_0(d_i, d_j), d_i, d_j, &r_w_0);
              if (p_1_j == 0 && p_2_j == 0 && p_3_j == 0 && p_4_j == 0) {
                ACC_w_0(d_i, d_j) = r_w_0;
              } else {
                ACC_w_0(d_i, d_j) = (ACC_w_0(d_i, d_j) + r_w_0);
              }
            }
          }
        }
      }
    }
  }

}
