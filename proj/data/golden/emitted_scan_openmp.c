/* scan: MDH kernel for OpenMP */
#include <stdlib.h>
#include <limits.h>
#include <math.h>
#ifdef _OPENMP
#include <omp.h>
#endif

/* 0.1 scalar function */
static inline void mdh_f(const long long in_x_0, const long long d_i, long long* out_y_0) {
  *out_y_0 = in_x_0;
}

/* combine: i=ps:+ */

/* 0.2 input index maps */
#define IDX_x_0(d_i) (((d_i)))
/* 0.3 output index maps */
#define IDX_y_0(d_i) (((d_i)))

void mdh_kernel(const long long* x, long long* y) {
  /* 0.4 buffers */
#ifdef _OPENMP
  omp_set_max_active_levels(1);
#endif
  /* 0.5 access aliases */
#define IN_x_0(d_i) x[IDX_x_0(d_i)]
#define ACC_y_0(d_i) y[IDX_y_0(d_i)]

  /* de phase: staging copies */

  /* fused de / scalar / re nest */
  /* level (1,x) tag (MM,x) */
  const long long p_1_i = 0;
  /* level (2,x) tag (L2,x) */
  for (long long p_2_i = 0; p_2_i < 2; ++p_2_i) {
    /* level (3,x) tag (L1,x) */
    for (long long p_3_i = 0; p_3_i < 4; ++p_3_i) {
      /* level (4,x) tag (COR,x) */
      #pragma omp parallel for schedule(static)
      for (long long p_4_i = 0; p_4_i < 2; ++p_4_i) {
        const long long d_i = p_1_i * 16 + p_2_i * 8 + p_3_i * 2 + p_4_i;
        long long r_y_0;
        mdh_f(IN_x_0(d_i), d_i, &r_y_0);
        ACC_y_0(d_i) = r_y_0;
      }
    }
  }

  /* prefix combine along i */
  for (long long d_i = 1; d_i < 16; ++d_i) {
    ACC_y_0(d_i) = (ACC_y_0(d_i) + ACC_y_0((d_i - 1)));
  }

}
