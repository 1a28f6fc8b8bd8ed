"""nsinfer: a unified neurosymbolic inference engine.

A model pairs an ordered symbol set with a semantics (Boolean or fuzzy
t-norm) and a belief function (independent Bernoulli, log-linear, Dirac
point, or fuzzy membership). Inference integrates a logic function times
the belief over interpretation space, exactly for finite spaces and
numerically over fuzzy cubes, with presets that reproduce the computations
of Semantic Loss, propositional DeepProbLog/NeurASP, NMLN, LTN/SBR, and
NeuPSL.
"""

from .belief import (
    Belief,
    DiracPoint,
    FuzzyMembership,
    IndependentBernoulli,
    LogLinear,
    normalize,
)
from .gradients import (
    GradientResult,
    GradientUndefinedError,
    grad_dirac,
    grad_loglinear,
    grad_wmc,
)
from .integrator import (
    CompiledCircuit,
    ConjNode,
    ConstLeaf,
    DecisionNode,
    FunctionalResult,
    Model,
    compile_formula,
    enumerate_models,
    infer,
    lebesgue_simple,
    map_inference,
    wmc_eval,
)
from .logic import (
    BOOL,
    UNIT,
    AtomRef,
    And,
    Boolean,
    BoundedReal,
    ConstFalse,
    ConstTrue,
    Domain,
    FiniteSet,
    Formula,
    Iff,
    Implies,
    Interpretation,
    LinCmp,
    Not,
    NotEnumerableError,
    Or,
    ParseError,
    Symbol,
    Theory,
    UnitInterval,
    enumerate_interpretations,
    format_formula,
    free_symbols,
    make_symbols,
    parse_formula,
)
from .measure import (
    BorelMonteCarlo,
    BorelQuadrature,
    Counting,
    IntegralEstimate,
    KahanSum,
    MeasureSpec,
    ProductMixed,
    integrate,
)
from .modelfile import ModelFile, ModelFileError, Query, load_model_file, parse_model_file
from .presets import (
    LossResult,
    PRESET_NAMES,
    PresetRun,
    SystemPreset,
    make_preset,
    run_preset,
    semantic_loss,
)
from .semantics import (
    GOEDEL,
    LUKASIEWICZ,
    PRODUCT,
    TNORM_FAMILIES,
    BooleanSem,
    Direct,
    EvalError,
    FuzzySem,
    LogicFn,
    Semantics,
    Threshold,
    TNormFamily,
    ValueSetIndicator,
    apply_logic_fn,
    eval_batch,
    evaluate,
)

__version__ = "0.1.0"
