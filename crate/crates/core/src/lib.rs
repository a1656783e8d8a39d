pub mod autodiff;
pub mod cli;
pub mod corpus;
pub mod evalkit;
pub mod layers;
pub mod models;
pub mod quality;
