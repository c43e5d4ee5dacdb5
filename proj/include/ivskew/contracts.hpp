#pragma once

#include "ivskew/errors.hpp"

namespace ivskew {

/// European put position: n contracts of strike K expiring at T.
struct PutContract {
    double strike;   ///< K, currency, > 0
    double maturity; ///< T, years, > 0
    int quantity;    ///< n, >= 1

    PutContract(double K, double T, int n = 1)
        : strike(K), maturity(T), quantity(n) {
        if (K <= 0.0) throw ValidationError("PutContract: strike must be positive");
        if (T <= 0.0) throw ValidationError("PutContract: maturity must be positive");
        if (n < 1) throw ValidationError("PutContract: quantity must be >= 1");
    }

    /// Effective strike-scale nK entering the pricing PDE.
    double k_tilde() const { return quantity * strike; }
};

}  // namespace ivskew
