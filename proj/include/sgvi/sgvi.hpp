#pragma once

#include "sgvi/errors.hpp"
#include "sgvi/types.hpp"
#include "sgvi/rng.hpp"
#include "sgvi/gaussian.hpp"
#include "sgvi/param_vector.hpp"
#include "sgvi/latent_model.hpp"
#include "sgvi/estimators.hpp"

#include "sgvi/models/logistic.hpp"
#include "sgvi/models/vae.hpp"

#include "sgvi/solvers/cg.hpp"
#include "sgvi/solvers/trace.hpp"
#include "sgvi/solvers/driver.hpp"
#include "sgvi/solvers/hfsgvi.hpp"
#include "sgvi/solvers/lbfgs.hpp"
#include "sgvi/solvers/adagrad.hpp"

#include "sgvi/analysis/polynomial.hpp"
#include "sgvi/analysis/identities.hpp"
#include "sgvi/analysis/variance.hpp"
#include "sgvi/analysis/lipschitz.hpp"
#include "sgvi/analysis/finite_diff.hpp"

#include "sgvi/io/datasets.hpp"
#include "sgvi/io/minibatch.hpp"
#include "sgvi/io/libsvm.hpp"
#include "sgvi/io/idx.hpp"
#include "sgvi/io/csv.hpp"
#include "sgvi/io/pgm.hpp"
#include "sgvi/io/trace_io.hpp"
#include "sgvi/io/theta_io.hpp"
#include "sgvi/io/synthetic.hpp"
#include "sgvi/io/hash.hpp"
