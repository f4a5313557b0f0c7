//! Physician referral networks: construction from patient-sharing edge lists,
//! Forman-Ricci and Ollivier-Ricci edge curvature, classical network
//! descriptors, and the feature/correlation analytics built on top of them.
//!
//! The crate is `no_std` and only needs `alloc`. Everything that touches the
//! file system, threads or the network lives in the `refnet` crate.

#![cfg_attr(not(test), no_std)]

extern crate alloc;

pub mod analytics;
pub mod curvature;
pub mod descriptors;
mod error;
pub mod graph;
pub mod ot;
pub mod record;
pub mod stats;

pub use crate::{
    analytics::{
        assemble_features, correlate, distribution_summary, join_metadata, BinSpec, Cell,
        ColumnType, CorrelationMethod, CorrelationResult, DistributionSummary, Frame,
        MetadataTable, NetworkFeatures, RegionLabels, RegionMap, TableName,
    },
    curvature::{
        curvature_all_edges, forman_edge, network_curvature_summary, neighborhood_measure,
        node_curvature, ollivier_edge, ApproxConfig, CurvatureConfig, CurvatureKind,
        CurvatureKinds, CurvatureReport, CurvatureSummary, EdgeCurvature, MeasureConfig,
        OllivierSolver,
    },
    descriptors::{descriptor_row, DescriptorRow},
    error::{Error, Result},
    graph::{build_network, Components, Graph},
    ot::{wasserstein1, wasserstein1_approx, ApproxW1, CostMatrix, DiscreteMeasure, Transport},
    record::{
        partition, EdgeRecord, FilterConfig, NetworkKey, ParseStats, ProviderId, RejectReason,
        Symmetrization,
    },
};
