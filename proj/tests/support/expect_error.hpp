#pragma once

#include "selrag/error.hpp"

#include <gtest/gtest.h>

/// Fails unless `stmt` throws selrag::Error carrying `expected_code`.
#define EXPECT_SELRAG_ERROR(stmt, expected_code)                                                                 \
  do {                                                                                                          \
    try {                                                                                                       \
      stmt;                                                                                                     \
      ADD_FAILURE() << #stmt " did not throw";                                                                 \
    } catch (const ::selrag::Error& selrag_err_) {                                                              \
      EXPECT_EQ(::selrag::to_string(selrag_err_.code()), ::selrag::to_string(expected_code)) << selrag_err_.what(); \
    }                                                                                                           \
  } while (false)
