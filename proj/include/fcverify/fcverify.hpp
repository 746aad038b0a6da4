#pragma once

#include "fcverify/dataset.hpp"
#include "fcverify/decomposition.hpp"
#include "fcverify/diagnostics.hpp"
#include "fcverify/errors.hpp"
#include "fcverify/inference.hpp"
#include "fcverify/pairs.hpp"
#include "fcverify/recalibration.hpp"
#include "fcverify/scoring.hpp"
#include "fcverify/synthetic.hpp"
#include "fcverify/version.hpp"
