//! File handling and the command line front end for the fusion/HDR
//! pipeline. All image math lives in `hdrfuse-core`; this crate adds
//! manifests, curve files, and the `hdrfuse` binary's subcommands.

pub mod cli;
pub mod curvefile;
pub mod error;
pub mod manifest;
