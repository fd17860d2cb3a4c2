//! Compiles and runs the guide's code blocks as doc-tests.

#[doc = include_str!("../../../book/src/index.md")]
pub struct Introduction;

#[doc = include_str!("../../../book/src/potentials.md")]
pub struct Potentials;

#[doc = include_str!("../../../book/src/equilibrium.md")]
pub struct Equilibrium;

#[doc = include_str!("../../../book/src/master-operator.md")]
pub struct MasterOperator;

#[doc = include_str!("../../../book/src/transport.md")]
pub struct Transport;

#[doc = include_str!("../../../book/src/sampling.md")]
pub struct Sampling;

#[doc = include_str!("../../../book/src/statistics.md")]
pub struct Statistics;

#[doc = include_str!("../../../book/src/cli.md")]
pub struct CommandLine;
