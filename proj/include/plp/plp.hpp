#ifndef PLP_PLP_HPP
#define PLP_PLP_HPP

#include "plp/em.hpp"
#include "plp/ground.hpp"
#include "plp/interpretations.hpp"
#include "plp/mle.hpp"
#include "plp/parser.hpp"
#include "plp/program.hpp"
#include "plp/report.hpp"
#include "plp/sample.hpp"
#include "plp/stats.hpp"

#endif
