#ifndef PMLMC_COST_HPP
#define PMLMC_COST_HPP

#include <cstdint>

namespace pmlmc {

// Deterministic operation-count model. Wall clock is recorded elsewhere but
// never asserted on; these units are what cost comparisons and the sample
// allocator consume.
//
//   field evaluation   2*M + 2 per query point (KL mat-vec plus exp)
//   assembly           8 per interval, 40 per triangle
//   factorization      sum over columns j of nnz(L_:j)^2
//   triangular solves  4 * nnz(L)
//   transfers          counted by the operator that performs them
struct cost_counter {
    double ops = 0.0;
    std::int64_t solves = 0;
    std::int64_t factorizations = 0;
    std::int64_t field_evals = 0;
    std::int64_t rejects = 0;

    cost_counter& operator+=(const cost_counter& o) {
        ops += o.ops;
        solves += o.solves;
        factorizations += o.factorizations;
        field_evals += o.field_evals;
        rejects += o.rejects;
        return *this;
    }
};

} // namespace pmlmc

#endif
