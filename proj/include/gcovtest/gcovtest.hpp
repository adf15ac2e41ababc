#ifndef GCOVTEST_GCOVTEST_HPP
#define GCOVTEST_GCOVTEST_HPP

#include "gcovtest/autocov.hpp"
#include "gcovtest/basis.hpp"
#include "gcovtest/bootstrap.hpp"
#include "gcovtest/distributions.hpp"
#include "gcovtest/errors.hpp"
#include "gcovtest/gcov.hpp"
#include "gcovtest/models.hpp"
#include "gcovtest/montecarlo.hpp"
#include "gcovtest/nlsd.hpp"
#include "gcovtest/optimize.hpp"
#include "gcovtest/parallel.hpp"
#include "gcovtest/report.hpp"
#include "gcovtest/series.hpp"

#endif  // GCOVTEST_GCOVTEST_HPP
