#include "krlab/attack/config.hpp"

#include "krlab/common.hpp"

namespace krlab::attack {

void AttackConfig::validate() const {
    if (objective == Objective::targeted)
        require(target_entity != kg::kNone, "attack config: targeted objective needs a target");
    if (vectors == Vector::both)
        require(n_iter >= 1, "attack config: combined attack needs n_iter >= 1");
    require(n_kp <= maxima.n_kp, "attack config: n_kp exceeds the configured maximum");
    require(n_qp <= maxima.n_qp, "attack config: n_qp exceeds the configured maximum");
    require(n_iter <= maxima.n_iter, "attack config: n_iter exceeds the configured maximum");
    require(lambda >= 0.0, "attack config: lambda must be nonnegative");
    require(surrogate.dim > 0 && surrogate.depth > 0, "attack config: surrogate spec positive");
}

}  // namespace krlab::attack
