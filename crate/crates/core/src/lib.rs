// SPDX-License-Identifier: Apache-2.0

pub mod diagnosis;
pub mod instrument;
pub mod minic;
pub mod replica;
pub mod sim;
pub mod spectrum;
pub mod transport;
pub mod vm;
