#ifndef PCAMIL_PCAMIL_HPP
#define PCAMIL_PCAMIL_HPP

#include "pcamil/adam.hpp"
#include "pcamil/config.hpp"
#include "pcamil/dataset.hpp"
#include "pcamil/experiment.hpp"
#include "pcamil/kfold.hpp"
#include "pcamil/metrics.hpp"
#include "pcamil/mil_net.hpp"
#include "pcamil/patch_scorer.hpp"
#include "pcamil/pca_embed.hpp"
#include "pcamil/priors.hpp"
#include "pcamil/stats.hpp"
#include "pcamil/synthetic.hpp"
#include "pcamil/training.hpp"
#include "pcamil/types.hpp"

#endif  // PCAMIL_PCAMIL_HPP
