#pragma once

// Everything, in pipeline order.
#include "sheetparts/error.hpp"
#include "sheetparts/a1.hpp"
#include "sheetparts/number.hpp"
#include "sheetparts/ast.hpp"
#include "sheetparts/lexer.hpp"
#include "sheetparts/parser.hpp"
#include "sheetparts/printer.hpp"
#include "sheetparts/sema.hpp"
#include "sheetparts/layout.hpp"
#include "sheetparts/grid.hpp"
#include "sheetparts/codegen.hpp"
#include "sheetparts/value.hpp"
#include "sheetparts/eval.hpp"
#include "sheetparts/emit.hpp"
#include "sheetparts/repo.hpp"
#include "sheetparts/service.hpp"
