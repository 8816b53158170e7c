#pragma once

#include "cguide/rng.hpp"
#include "cguide/world.hpp"

#include <string>
#include <vector>

namespace cguide::worlds {

/// One prompt "base" with N(0, I); the unconditional distribution is N(0, I).
World standard_normal(Eigen::Index dim);

/// d = 1: "pos" ~ N(mu, 1) and "neg" ~ N(-mu, 1) with equal priors.
World two_prompt(double mu = 2.0);

/// d = 2, coordinate 0 = species (cat +2 / dog -2), coordinate 1 = glasses
/// (+2 / -2), unit variance. Leaves weight glasses 0.3 within each species so
/// the unconditional distribution factorizes. "cat" and "dog" are also
/// registered (prior 0) as their two-leaf mixtures.
World factorized();

/// d = 2 single Gaussians: "scene" ~ N((0, 1), I), "scene+warm" ~
/// N((delta/2, 1), I), "scene+cool" ~ N((-delta/2, 1), I). The contrastive
/// direction is coordinate 0.
World linear(double delta = 1.0);

/// d = 2 generalist/expert world. Domain "face" = equal mixture of N((0, +-2), I).
/// "photo+glasses" ~ N((offset, 2), I) and "photo+noglasses" ~ N((offset, -2), I) share
/// the off-domain coordinate 0, so their contrast only moves coordinate 1.
World expert(double offset = 8.0);

/// Random mixture world for property tests: prompts "p" and "n" with 1..3
/// components each, random means, SPD covariances, weights and priors.
World random(Rng& rng, Eigen::Index dim);

/// Names accepted by by_name().
std::vector<std::string> names();
/// Built-in world by name: standard_normal[_<d>], two_prompt, factorized, linear, expert.
World by_name(const std::string& name);

}  // namespace cguide::worlds
