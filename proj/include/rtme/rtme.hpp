#pragma once

// Estimators, selectors and metrics. CSV/JSON exchange lives in rtme/io.hpp
// and run manifests in rtme/manifest.hpp (needs OpenSSL).

#include "rtme/cvl.hpp"
#include "rtme/elliptical.hpp"
#include "rtme/errors.hpp"
#include "rtme/metrics.hpp"
#include "rtme/random.hpp"
#include "rtme/samples.hpp"
#include "rtme/scatter_matrix.hpp"
#include "rtme/tyler.hpp"
