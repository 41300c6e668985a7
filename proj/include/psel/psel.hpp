#pragma once

#include <psel/calibration.hpp>
#include <psel/error.hpp>
#include <psel/evaluation.hpp>
#include <psel/report.hpp>
#include <psel/selection.hpp>
#include <psel/synth.hpp>
#include <psel/tensor.hpp>
#include <psel/tensor_io.hpp>
