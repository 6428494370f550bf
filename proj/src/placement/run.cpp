#include "memplan/placement/run.hpp"

#include "memplan/error.hpp"

namespace memplan::placement {
    PlacementResult run_placement(const dsl::ProgramFn& program, const dsl::ProgramOptions& options,
                                  const std::string& output_path) {
        if (options.worker_id >= options.worker_count) {
            throw ConfigError("worker id " + std::to_string(options.worker_id) + " out of range for "
                              + std::to_string(options.worker_count) + " workers");
        }
        if (options.driver == bytecode::DriverId::LeveledBatch) {
            options.batch.validate();
            if (options.batch.largest_size() > pg_size(options.page_shift)) {
                throw ConfigError("page size " + std::to_string(pg_size(options.page_shift))
                                  + " bytes is smaller than the largest ciphertext ("
                                  + std::to_string(options.batch.largest_size()) + " bytes)");
            }
        }

        bytecode::ProgramHeader header;
        header.dialect = bytecode::Dialect::Virtual;
        header.driver = options.driver;
        header.address_unit = bytecode::unit_for(options.driver);
        header.page_shift = options.page_shift;

        bytecode::ProgramWriter writer(output_path, header);
        PlacementResult result;
        {
            dsl::BuilderContext ctx(options, writer);
            try {
                program(options);
            } catch (const BuilderError& e) {
                throw BuilderError("at instruction " + std::to_string(ctx.emitted()) + ": " + e.what());
            } catch (const AllocatorError& e) {
                throw AllocatorError("at instruction " + std::to_string(ctx.emitted()) + ": " + e.what());
            }
            result.stats = ctx.allocator().stats();
            if (result.stats.live_allocations != 0) {
                throw BuilderError("program leaked " + std::to_string(result.stats.live_allocations) + " allocations");
            }
        }
        writer.finish();
        result.instructions = writer.count();
        return result;
    }
}
