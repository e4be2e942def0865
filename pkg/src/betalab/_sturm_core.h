/* Multi-shift Sturm recurrence. Written branch-free so gcc vectorizes the
 * inner loop over shifts; the operation order matches _sturm_py.py.
 * Counts accumulate in doubles (exact below 2**53) because mixed
 * int64/double lanes block SSE2 vectorization. */
#ifndef BETALAB_STURM_CORE_H
#define BETALAB_STURM_CORE_H

#include <math.h>
#include <stddef.h>

#if defined(__GNUC__) && !defined(__clang__) && defined(__x86_64__)
#define BETALAB_CLONES __attribute__((target_clones("avx2", "default")))
#else
#define BETALAB_CLONES
#endif

BETALAB_CLONES
static void sturm_count_many(const double *restrict diag,
                             const double *restrict offsq, ptrdiff_t n,
                             const double *restrict x, double *restrict d,
                             double *restrict cnt, ptrdiff_t m,
                             double pivmin)
{
    ptrdiff_t i, s;
    double a = diag[0];
    for (s = 0; s < m; s++) {
        double t = a - x[s];
        t = (fabs(t) < pivmin) ? -pivmin : t;
        d[s] = t;
        cnt[s] = (t < 0.0) ? 1.0 : 0.0;
    }
    for (i = 1; i < n; i++) {
        double ai = diag[i];
        double b2 = offsq[i - 1];
        for (s = 0; s < m; s++) {
            double t = (ai - x[s]) - b2 / d[s];
            t = (fabs(t) < pivmin) ? -pivmin : t;
            d[s] = t;
            cnt[s] += (t < 0.0) ? 1.0 : 0.0;
        }
    }
}

#endif
